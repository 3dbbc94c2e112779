"""Brute-force reference computations on small edge sets.

Probabilities are assembled from integer configuration counts grouped by the
number of open edges, then weighted with exact rational arithmetic, so the
results carry no floating error beyond the conversion of ``p`` itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import _kernels as K
from .errors import CapExceeded, InvalidArgument
from .graph_model import GraphSpec, Window

DEFAULT_CAP = 24
# configurations handed to the compiled enumerator per call
_CHUNK = 1 << 20


@dataclass(frozen=True)
class Edge:
    tail: tuple
    head: tuple
    dir_index: int


@dataclass
class EnumerationTask:
    g: GraphSpec
    vertices: list
    edge_list: list
    cap: int = DEFAULT_CAP
    index: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_window(cls, g: GraphSpec, window: Window, cap: int = DEFAULT_CAP) -> "EnumerationTask":
        return cls.from_vertices(g, window.vertices(), cap)

    @classmethod
    def from_vertices(cls, g: GraphSpec, vertices, cap: int = DEFAULT_CAP, extra_edges=()) -> "EnumerationTask":
        verts = sorted({tuple(int(c) for c in v) for v in vertices})
        vset = set(verts)
        edges = []
        for x in verts:
            for k, v in enumerate(g.dirs):
                y = tuple(a + b for a, b in zip(x, v))
                if y in vset:
                    edges.append(Edge(x, y, k))
        for e in extra_edges:
            if e.head not in vset:
                verts.append(e.head)
                vset.add(e.head)
            edges.append(e)
        edges.sort(key=lambda e: (e.tail, e.dir_index))
        if len(edges) > cap:
            raise CapExceeded(f"{len(edges)} edges exceed the enumeration cap {cap}")
        return cls(g, verts, edges, cap, {v: i for i, v in enumerate(verts)})

    @property
    def m(self) -> int:
        return len(self.edge_list)


def as_fraction(p) -> Fraction:
    """Exact rational for ``p``; floats are read through their shortest repr."""
    if isinstance(p, float):
        return Fraction(repr(p))
    return Fraction(p)


def binomial_weights(m: int, p) -> list:
    """``p^k (1-p)^(m-k)`` for ``k = 0..m`` as exact fractions."""
    p = as_fraction(p)
    q = 1 - p
    return [p**k * q ** (m - k) for k in range(m + 1)]


def passage_counts(task: EnumerationTask, source, targets=()):
    """``counts[v, t, k]`` and ``set_counts[t, k]`` over all ``2^m`` configurations.

    See ``enumerate_times``; ``set_counts`` refers to the minimum time over
    ``targets``.
    """
    m = task.m
    if m > task.cap:
        raise CapExceeded(f"{m} edges exceed the enumeration cap {task.cap}")
    tails = np.array([task.index[e.tail] for e in task.edge_list], dtype=np.int64)
    heads = np.array([task.index[e.head] for e in task.edge_list], dtype=np.int64)
    src = task.index[tuple(source)]
    nv = len(task.vertices)
    total = 1 << m
    is_target = np.zeros(nv, dtype=np.bool_)
    for t in targets:
        if tuple(t) in task.index:
            is_target[task.index[tuple(t)]] = True
    counts = np.zeros((nv, m + 2, m + 1), dtype=np.int64)
    set_counts = np.zeros((m + 2, m + 1), dtype=np.int64)
    for lo in range(0, total, _CHUNK):
        c, sc = K.enumerate_times(nv, tails, heads, src, lo, min(total, lo + _CHUNK), is_target)
        counts += c
        set_counts += sc
    return counts, set_counts


def _weigh(count_row, weights) -> Fraction:
    return sum((int(c) * w for c, w in zip(count_row, weights) if c), Fraction(0))


def connection_probabilities(task: EnumerationTask, source, p) -> dict:
    """Exact ``P_p(source -> v)`` through edges of the task, for every vertex."""
    counts, _ = passage_counts(task, source)
    weights = binomial_weights(task.m, p)
    return {v: _weigh(counts[i, 0], weights) for i, v in enumerate(task.vertices)}


def exact_event_probability(task: EnumerationTask, p, event: Callable[[int], bool]) -> Fraction:
    """Sum of ``p^#open (1-p)^#closed`` over configurations where ``event`` holds.

    ``event`` receives the configuration as an integer bitmask: bit ``i`` set
    means ``task.edge_list[i]`` is open.  Pass a :class:`Reach` instance for
    connectivity events, which are evaluated by the compiled enumerator.
    """
    m = task.m
    if m > task.cap:
        raise CapExceeded(f"{m} edges exceed the enumeration cap {task.cap}")
    if isinstance(event, Reach):
        _, set_counts = passage_counts(task, event.source, event.targets)
        return _weigh(set_counts[0], binomial_weights(m, p))
    by_k = [0] * (m + 1)
    for mask in range(1 << m):
        if event(mask):
            by_k[mask.bit_count()] += 1
    return _weigh(by_k, binomial_weights(m, p))


@dataclass(frozen=True)
class Reach:
    """Event ``source -> some target`` along open edges of the task."""

    source: tuple
    targets: tuple

    def as_predicate(self, task: EnumerationTask) -> Callable[[int], bool]:
        adj = [[] for _ in task.vertices]
        for i, e in enumerate(task.edge_list):
            adj[task.index[e.tail]].append((i, task.index[e.head]))
        src = task.index[tuple(self.source)]
        goal = {task.index[tuple(t)] for t in self.targets if tuple(t) in task.index}

        def pred(mask: int) -> bool:
            seen = {src}
            stack = [src]
            while stack:
                v = stack.pop()
                if v in goal:
                    return True
                for i, h in adj[v]:
                    if mask >> i & 1 and h not in seen:
                        seen.add(h)
                        stack.append(h)
            return False

        return pred


def exact_passage_distribution(task: EnumerationTask, p, x, y) -> dict:
    """Law of the passage time from ``x`` to ``y`` using only the task's edges.

    Keys are integer times; ``None`` holds the mass of "no path at all".
    """
    if tuple(x) == tuple(y):
        return {0: Fraction(1)}
    counts, _ = passage_counts(task, x)
    weights = binomial_weights(task.m, p)
    row = counts[task.index[tuple(y)]]
    out = {}
    for t in range(task.m + 2):
        mass = _weigh(row[t], weights)
        if mass:
            out[None if t == task.m + 1 else t] = mass
    return out


def distribution_mean(dist: dict) -> Fraction:
    reach = {t: w for t, w in dist.items() if t is not None}
    total = sum(reach.values())
    if not total:
        raise InvalidArgument("target is never reachable")
    return sum(t * w for t, w in reach.items()) / total


def path_count_bound(M: int, p, n: int, l_max: int):
    """Partial sum of the expected number of open paths down to level ``-n``.

    Term ``l`` counts step sequences with ``l`` up-steps and ``l + n``
    down-steps: ``C(2l+n, l) (2M+1)^l p^(2l+n)``.  The closed bound
    ``(2p)^n / (1 - 4p^2(2M+1))`` is returned only where the geometric
    series converges, else ``None``.
    """
    if l_max < 0 or n < 0 or M < 1:
        raise InvalidArgument("need M >= 1, n >= 0, l_max >= 0")
    pf = as_fraction(p)
    partial = sum(
        (math.comb(2 * l + n, l) * (2 * M + 1) ** l * pf ** (2 * l + n) for l in range(l_max + 1)),
        Fraction(0),
    )
    ratio = 4 * pf * pf * (2 * M + 1)
    closed = (2 * pf) ** n / (1 - ratio) if ratio < 1 else None
    return partial, closed


def open_path_expectation(g: GraphSpec, vertices, p, n: int) -> dict:
    """Expected number of open self-avoiding paths from the origin ending on ``y = -n``.

    Paths stay inside ``vertices`` (last coordinate is the height).  Returned
    as ``{up_steps: expectation}`` so it can be compared term by term with
    :func:`path_count_bound`.
    """
    vset = {tuple(v) for v in vertices}
    origin = (0,) * g.d
    if origin not in vset:
        raise InvalidArgument("origin must belong to the vertex set")
    pf = as_fraction(p)
    by_len: dict = {}
    path = [origin]
    on_path = {origin}

    def dfs(x):
        if x[-1] == -n:
            by_len[len(path) - 1] = by_len.get(len(path) - 1, 0) + 1
        for v in g.dirs:
            y = tuple(a + b for a, b in zip(x, v))
            if y in vset and y not in on_path:
                path.append(y)
                on_path.add(y)
                dfs(y)
                path.pop()
                on_path.remove(y)

    dfs(origin)
    out: dict = {}
    for length, cnt in by_len.items():
        up = (length - n) // 2
        out[up] = out.get(up, Fraction(0)) + cnt * pf**length
    return out
