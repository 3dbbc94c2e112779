"""Glue between the Python-level types and the compiled kernels."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .graph_model import Window
from .random_field import replica_key_arrays

DEFAULT_THREADS = 1


class WindowArgs(NamedTuple):
    radius: np.ndarray
    strides: np.ndarray
    forms: np.ndarray
    psi_cap: np.int64
    use_members: bool
    members: np.ndarray

    def as_tuple(self):
        return (self.radius, self.strides, self.forms, self.psi_cap, self.use_members, self.members)


@lru_cache(maxsize=256)
def window_args(window: Window) -> WindowArgs:
    d = window.d
    radius = np.array(window.radius, dtype=np.int64)
    strides = np.ones(d, dtype=np.int64)
    for i in range(1, d):
        strides[i] = strides[i - 1] * (2 * radius[i - 1] + 1)
    if window.psi is None:
        forms = np.zeros((0, d), dtype=np.int64)
        cap = np.int64(0)
    else:
        forms, den = window.psi.integer_forms
        cap = np.int64(math.floor(window.level * den))
    if window.members is None:
        members = np.full(4, K.EMPTY, dtype=np.int64)
        use = False
    else:
        idx = np.array(
            [sum((c + r) * s for c, r, s in zip(v, window.radius, strides.tolist()))
             for v in window.members if window.contains(v)],
            dtype=np.int64,
        )
        members = K.make_set(idx)
        use = True
    return WindowArgs(radius, strides, forms, cap, use, members)


def window_volume(window: Window) -> int:
    if window.members is not None:
        return len(window.members)
    return math.prod(2 * r + 1 for r in window.radius)


def run_replicas(batch_fn, seed: int, reps: int, threads: int | None, *args, start: int = 0):
    """Run ``batch_fn(k0s, k1s, *args)`` over replica keys, split across threads.

    Results are concatenated in replica order, so they do not depend on the
    number of threads.
    """
    k0s, k1s = replica_key_arrays(seed, start, reps)
    threads = max(1, int(threads or DEFAULT_THREADS))
    if threads == 1 or reps < 2 * threads:
        return batch_fn(k0s, k1s, *args)
    bounds = np.linspace(0, reps, threads + 1).astype(int)
    with ThreadPoolExecutor(threads) as pool:
        parts = list(pool.map(lambda ab: batch_fn(k0s[ab[0]:ab[1]], k1s[ab[0]:ab[1]], *args),
                              zip(bounds[:-1], bounds[1:])))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))


def as_vertex(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.int64).reshape(-1)
    if x.shape[0] != d:
        raise ValueError(f"vertex {tuple(x)} does not have dimension {d}")
    return x
