"""The boundary functional ``phi_p(S)`` and exponential-decay certificates.

For a finite set ``S`` containing the origin,

    phi_p(S) = p * sum over boundary edges (x, y) of P_p(0 -> x inside S),

and any ``S`` with ``phi_p(S) < 1`` and bounded weight yields
``P_p(r_psi(0) > 2kL) <= phi_p(S)^k`` with ``L >= max psi over S and dirs``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels as K
from ._engine import run_replicas, window_args
from .cluster import directional_survival
from .errors import CapExceeded, InvalidArgument
from .graph_model import GraphSpec, SubadditiveWeight, Window, psi_eval
from .oracle import DEFAULT_CAP, Edge, EnumerationTask, as_fraction, binomial_weights, passage_counts
from .random_field import FieldParams
from .stats import mean_interval, wilson_interval

DECAY_HEADER = ["k", "L", "predicted", "estimate", "ci_low", "ci_high", "flag"]


@dataclass(frozen=True)
class FiniteSet:
    vertices: frozenset
    psi: SubadditiveWeight | None = None

    def __post_init__(self):
        if not self.vertices:
            raise InvalidArgument("empty set")
        d = len(next(iter(self.vertices)))
        if (0,) * d not in self.vertices:
            raise InvalidArgument("the set must contain the origin")

    @classmethod
    def of(cls, vertices, psi: SubadditiveWeight | None = None) -> "FiniteSet":
        return cls(frozenset(tuple(int(c) for c in v) for v in vertices), psi)

    @property
    def d(self) -> int:
        return len(next(iter(self.vertices)))

    @property
    def psi_sup(self):
        if self.psi is None:
            return None
        return max(psi_eval(self.psi, v) for v in self.vertices)

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, x):
        return tuple(x) in self.vertices


def boundary(g: GraphSpec, S: FiniteSet) -> list:
    """Out-boundary edges, ordered by tail then direction index."""
    out = []
    for x in sorted(S.vertices):
        for k, v in enumerate(g.dirs):
            y = tuple(a + b for a, b in zip(x, v))
            if y not in S.vertices:
                out.append(Edge(x, y, k))
    return out


def internal_edge_count(g: GraphSpec, S: FiniteSet) -> int:
    return len(S) * g.m - len(boundary(g, S))


def _task(g, S, cap, x=None):
    extra = ()
    if x is not None and tuple(x) not in S.vertices:
        extra = [e for e in boundary(g, S) if e.head == tuple(x)]
    return EnumerationTask.from_vertices(g, S.vertices, cap, extra)


def restricted_connectivity(g: GraphSpec, S: FiniteSet, p: float, x, mode: str = "exact",
                            reps: int = 10000, seed: int = 0, cap: int = DEFAULT_CAP) -> float:
    """``P_p(0 -> x)`` along open paths whose intermediate vertices lie in ``S``.

    ``x`` is either in ``S`` or the head of a boundary edge.  ``mode`` is
    ``"exact"`` (enumeration, at most ``cap`` edges) or ``"mc"``.
    """
    x = tuple(int(c) for c in x)
    origin = (0,) * g.d
    if x == origin:
        return 1.0
    heads = {e.head for e in boundary(g, S)}
    if x not in S.vertices and x not in heads:
        raise InvalidArgument("x must lie in S or on its outer boundary")
    if mode == "exact":
        task = _task(g, S, cap, x)
        counts, _ = passage_counts(task, origin)
        w = binomial_weights(task.m, p)
        return float(sum((int(c) * wk for c, wk in zip(counts[task.index[x], 0], w)), Fraction(0)))
    if mode != "mc":
        raise InvalidArgument(f"unknown mode {mode!r}")
    window = Window.from_set(S.vertices | {x})
    args = window_args(window).as_tuple()
    m = g.m
    probs = np.full(m, float(p))
    order = np.arange(m, dtype=np.int64)
    origin_arr = np.zeros(g.d, dtype=np.int64)
    none = np.zeros((0, g.d), dtype=np.int64)
    zeros = np.zeros(m)
    hits = 0
    params = FieldParams(seed, p)
    for r in range(reps):
        k0, k1 = params.replica(r).key
        _, _, _, _, _, _, verts = K.explore_one(
            k0, k1, probs, g.dirs_array, order, origin_arr, *args, np.int64(len(S) + 1), none,
            False, origin_arr, np.int64(0), False, zeros, zeros)
        hits += bool(np.any(np.all(verts == np.array(x), axis=1)))
    return hits / reps


@dataclass
class PhiResult:
    value: float
    method: str
    boundary_size: int
    reps: int = 0
    ci_low: float | None = None
    ci_high: float | None = None
    exact: Fraction | None = field(default=None, repr=False)

    @property
    def upper(self) -> float:
        """Value used for one-sided comparisons: the interval top in MC mode."""
        return self.value if self.method == "exact" else self.ci_high


class PhiPolynomial:
    """``phi_p(S)`` as an exact polynomial in ``p`` (enumeration mode)."""

    def __init__(self, g: GraphSpec, S: FiniteSet, cap: int = DEFAULT_CAP):
        task = _task(g, S, cap)
        counts, _ = passage_counts(task, (0,) * g.d)
        self.m = task.m
        self.bnd = boundary(g, S)
        # configuration counts summed over boundary tails (with multiplicity)
        self.reach = np.zeros(self.m + 1, dtype=object)
        for e in self.bnd:
            self.reach += counts[task.index[e.tail], 0].astype(object)

    def __call__(self, p) -> Fraction:
        w = binomial_weights(self.m, p)
        return as_fraction(p) * sum((int(c) * wk for c, wk in zip(self.reach, w)), Fraction(0))


def phi(g: GraphSpec, S: FiniteSet, p: float, mode: str = "auto", reps: int = 20000,
        seed: int = 0, cap: int = DEFAULT_CAP, level: float = 0.95, threads: int | None = None) -> PhiResult:
    """``phi_p(S)`` by exact enumeration (``internal edges <= cap``) or Monte Carlo."""
    bnd = boundary(g, S)
    n_int = len(S) * g.m - len(bnd)
    if mode == "auto":
        mode = "exact" if n_int <= cap else "mc"
    if mode == "exact":
        if n_int > cap:
            raise CapExceeded(f"{n_int} internal edges exceed the enumeration cap {cap}")
        val = PhiPolynomial(g, S, cap)(p)
        return PhiResult(float(val), "exact", len(bnd), exact=val)
    if mode != "mc":
        raise InvalidArgument(f"unknown mode {mode!r}")
    window = Window.from_set(S.vertices)
    m = g.m
    _, _, _, exits, _, _ = run_replicas(
        K.explore_batch, seed, reps, threads, np.full(m, float(p)), g.dirs_array,
        np.arange(m, dtype=np.int64), np.zeros(g.d, dtype=np.int64), *window_args(window).as_tuple(),
        np.int64(len(S)), np.zeros((0, g.d), dtype=np.int64), False, np.zeros(g.d, dtype=np.int64),
        np.int64(0), False, np.zeros(m), np.zeros(m))
    mean, lo, hi, _ = mean_interval(p * exits.astype(float), level)
    return PhiResult(mean, "monte_carlo", len(bnd), reps, max(0.0, lo), hi)


def sublevel_set(g: GraphSpec, psi: SubadditiveWeight, k, cap: int) -> FiniteSet:
    """``{psi <= k}`` cut to the box ``|x_i| <= cap``, keeping what the origin can reach.

    Vertices that no path from the origin can reach contribute nothing to
    ``phi`` and are dropped.
    """
    origin = (0,) * g.d
    if psi_eval(psi, origin) > k:
        raise InvalidArgument("origin is not in the sublevel set")
    seen = {origin}
    queue = deque([origin])
    while queue:
        x = queue.popleft()
        for v in g.dirs:
            y = tuple(a + b for a, b in zip(x, v))
            if y in seen or max(abs(c) for c in y) > cap or psi_eval(psi, y) > k:
                continue
            seen.add(y)
            queue.append(y)
    return FiniteSet(frozenset(seen), psi)


@dataclass
class DecayCertificate:
    S: FiniteSet
    p: float
    phi: PhiResult
    L: int
    k: int = 0

    def predicted(self, k: int) -> float:
        return self.phi.upper**k

    def to_json(self) -> str:
        ci = [self.phi.ci_low, self.phi.ci_high] if self.phi.method != "exact" else [self.phi.value] * 2
        return json.dumps({"S": [list(v) for v in sorted(self.S.vertices)], "p": self.p,
                           "phi": self.phi.value, "phi_ci": ci, "L": self.L})


def decay_length(g: GraphSpec, S: FiniteSet, psi: SubadditiveWeight) -> int:
    top = max(max(psi_eval(psi, v) for v in S.vertices), max(psi_eval(psi, v) for v in g.dirs))
    return max(1, math.ceil(top))


def find_good_set(g: GraphSpec, psi: SubadditiveWeight, p: float, k_max: int, transverse_cap: int,
                  reps: int = 20000, seed: int = 0, mode: str = "auto",
                  threads: int | None = None) -> DecayCertificate | None:
    """First sublevel set ``S_k`` (``k = 0..k_max``) certified to have ``phi < 1``.

    Monte Carlo values certify only when the upper interval bound is below 1.
    Returns ``None`` when no candidate qualifies.
    """
    if psi.kind != "linear":
        raise InvalidArgument("candidate sets are built for linear weights only")
    for k in range(k_max + 1):
        S = sublevel_set(g, psi, k, transverse_cap)
        res = phi(g, S, p, mode, reps, seed, threads=threads)
        if res.upper < 1:
            return DecayCertificate(S, p, res, decay_length(g, S, psi), k)
    return None


@dataclass
class DecayRow:
    k: int
    L: int
    predicted: float
    estimate: float
    ci_low: float
    ci_high: float
    flag: bool

    def row(self) -> list:
        return [self.k, self.L, self.predicted, self.estimate, self.ci_low, self.ci_high, int(self.flag)]


def escape_probability(g: GraphSpec, psi: SubadditiveWeight, p: float, level: int, reps: int,
                       seed: int, threads: int | None = None, box_factor: int = 4):
    """Estimate ``P_p(r_psi(0) > level)``.

    The cluster is explored inside ``{psi <= level}`` cut to a box of radius
    ``box_factor * level``; leaving through the box counts as escaping, so
    the estimate is biased upwards only.
    """
    window = Window.psiball(psi, level, max(1, box_factor * level))
    m = g.m
    _, _, terms, _, _, _ = run_replicas(
        K.explore_batch, seed, reps, threads, np.full(m, float(p)), g.dirs_array,
        np.arange(m, dtype=np.int64), np.zeros(g.d, dtype=np.int64), *window_args(window).as_tuple(),
        np.int64(2**62), np.zeros((0, g.d), dtype=np.int64), False, np.zeros(g.d, dtype=np.int64),
        np.int64(0), False, np.zeros(m), np.zeros(m))
    return int(np.sum(terms != K.TERM_EXHAUSTED))


def verify_decay(g: GraphSpec, cert: DecayCertificate, k_range, reps: int = 100000, seed: int = 0,
                 level: float = 0.95, threads: int | None = None) -> list:
    """Compare ``P(r_psi(0) > 2kL)`` with ``phi^k`` for each ``k``.

    A row is flagged when the lower interval bound exceeds the prediction.
    """
    psi = cert.S.psi
    if psi is None:
        raise InvalidArgument("certificate set carries no weight function")
    rows = []
    for k in k_range:
        hits = escape_probability(g, psi, cert.p, 2 * k * cert.L, reps, seed, threads)
        lo, hi = wilson_interval(hits, reps, level)
        pred = cert.predicted(k)
        rows.append(DecayRow(k, cert.L, pred, hits / reps, lo, hi, lo > pred))
    return rows


def decay_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DECAY_HEADER)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def theta_lower_bound(p: float, ptilde: float) -> float:
    """``(p - ptilde) / (p (1 - ptilde))``, valid for ``0 < ptilde <= p < 1``."""
    if not (0 < ptilde <= p < 1):
        raise InvalidArgument(f"need 0 < ptilde <= p < 1, got p={p}, ptilde={ptilde}")
    return (p - ptilde) / (p * (1 - ptilde))


def certified_threshold(g: GraphSpec, psi: SubadditiveWeight, p_grid, k_max: int, transverse_cap: int,
                        reps: int = 20000, seed: int = 0, threads: int | None = None):
    """Largest grid value of ``p`` admitting a certificate, with all certificates found."""
    found = {}
    for p in sorted(p_grid):
        cert = find_good_set(g, psi, p, k_max, transverse_cap, reps, seed, threads=threads)
        if cert is not None:
            found[p] = cert
    best = max(found) if found else None
    return best, found


def ptilde_interval(g: GraphSpec, psi: SubadditiveWeight, p_grid, n: int, k_max: int = 4,
                    transverse_cap: int = 10, reps: int = 2000, seed: int = 0,
                    threads: int | None = None):
    """``[largest certified p, smallest p with clearly positive survival at level n]``.

    Either end is ``None`` when the grid does not resolve it.
    """
    lo, _ = certified_threshold(g, psi, p_grid, k_max, transverse_cap, reps, seed, threads)
    hi = None
    for p in sorted(p_grid):
        pt = directional_survival(g, psi.u, p, n, reps=reps, seed=seed, threads=threads)
        if pt.ci_low > 0:
            hi = p
            break
    return lo, hi
