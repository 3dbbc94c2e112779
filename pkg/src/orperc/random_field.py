"""Seeded, stateless edge randomness.

Every edge ``(x, dir_index)`` owns one uniform draw computed by Philox4x32-10
keyed with the 64-bit seed.  Openness at parameter ``p`` is ``uniform < p``,
so all values of ``p`` share one coupled configuration and the passage time
``t_e`` is simply ``0`` on open edges and ``1`` on closed ones.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import InvalidArgument

SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class FieldParams:
    seed: int
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidArgument(f"p must lie in [0, 1], got {self.p}")
        if not 0 <= self.seed <= SEED_MASK:
            raise InvalidArgument("seed must be a 64-bit unsigned integer")

    @property
    def key(self) -> tuple:
        return split_seed(self.seed)

    def replica(self, r: int) -> "FieldParams":
        return FieldParams(replica_seed(self.seed, r), self.p)


@dataclass(frozen=True)
class EdgeKey:
    x: tuple
    dir_index: int


def split_seed(seed: int) -> tuple:
    seed &= SEED_MASK
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


def join_key(k0, k1) -> int:
    return int(k0) | (int(k1) << 32)


def replica_seed(seed: int, r: int) -> int:
    """Seed of replica ``r``; independent streams without coordination."""
    k0, k1 = split_seed(seed)
    return join_key(*K.replica_key(k0, k1, np.int64(r)))


def replica_key_arrays(seed: int, start: int, count: int):
    k0, k1 = split_seed(seed)
    return K.replica_keys(k0, k1, np.int64(start), np.int64(count))


def edge_uniform(params: FieldParams, e: EdgeKey) -> float:
    k0, k1 = params.key
    return float(K.edge_uniform(k0, k1, np.asarray(e.x, dtype=np.int64), np.int64(e.dir_index)))


def edge_open(params: FieldParams, e: EdgeKey) -> bool:
    return edge_uniform(params, e) < params.p


def edge_time(params: FieldParams, e: EdgeKey) -> int:
    return 0 if edge_open(params, e) else 1


def edge_uniforms(seed: int, xs: np.ndarray, dir_index: int) -> np.ndarray:
    """Vectorised helper over many tails sharing a direction (statistical tests)."""
    k0, k1 = split_seed(seed)
    xs = np.ascontiguousarray(xs, dtype=np.int64)
    return _uniform_rows(k0, k1, xs, np.int64(dir_index))


@K.njit(cache=True, nogil=True)
def _uniform_rows(k0, k1, xs, k):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        out[i] = K.edge_uniform(k0, k1, xs[i], k)
    return out


def philox4x32_reference(ctr, key) -> tuple:
    """Pure-Python Philox4x32-10, used to cross-check the compiled version."""
    mask = 0xFFFFFFFF
    c = list(ctr)
    k = list(key)
    for _ in range(10):
        p0 = 0xD2511F53 * c[0]
        p1 = 0xCD9E8D57 * c[2]
        c = [(p1 >> 32) ^ c[1] ^ k[0], p1 & mask, (p0 >> 32) ^ c[3] ^ k[1], p0 & mask]
        k = [(k[0] + 0x9E3779B9) & mask, (k[1] + 0xBB67AE85) & mask]
    return tuple(c)
