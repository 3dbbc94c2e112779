"""Oriented first-passage percolation with Bernoulli {0, 1} edge times.

An edge costs 0 when open and 1 when closed, on the same field as the
percolation modules, so passage times and clusters are coupled exactly.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._engine import as_vertex, run_replicas, window_args
from .cluster import normalize_direction
from .errors import CapExceeded, InvalidArgument, InvalidWindow, NoCertificate
from .graph_model import GraphSpec, Window, generates_zd
from .oracle import as_fraction, binomial_weights, passage_counts
from .random_field import FieldParams
from .sharp_transition import FiniteSet, _task, boundary
from .stats import mean_interval, wilson_interval

STATUS = {K.FPP_FOUND: "found", K.FPP_UNREACHABLE: "unreachable", K.FPP_BUDGET: "budget_hit",
          K.FPP_BORDER: "border"}
SCALE_HEADER = ["target", "n", "reps", "mean", "ci_low", "ci_high", "unreachable_rate"]
TIME_DECAY_HEADER = ["n", "threshold", "reps", "hits", "estimate", "ci_low", "ci_high", "predicted", "flag"]
DEFAULT_WINDOW_FACTOR = 4
ZERO_THRESHOLD = 1e-3
INVALID_UNREACHABLE_RATE = 0.01
EXACT_DECAY_CAP = 20
_NO_BUDGET = np.int64(2**62)


@dataclass
class PassageResult:
    time: int | None
    expanded: int
    target: str
    status: str = "found"

    @property
    def reachable(self) -> bool:
        return self.time is not None


def _run(g, params, x, window, mode, target, level):
    x = as_vertex(x, g.d)
    if not window.contains(tuple(x)):
        raise InvalidWindow("start vertex outside window")
    k0, k1 = params.key
    st, t, settled, _, _, _ = K.dijkstra_one(
        k0, k1, params.p, g.dirs_array, x, *window_args(window).as_tuple(), np.int64(mode),
        np.asarray(target, dtype=np.int64), np.int64(level), False, False, _NO_BUDGET, False, False)
    return int(st), int(t), int(settled)


def passage_time(g: GraphSpec, params: FieldParams, x, y, window: Window) -> PassageResult:
    """Minimum passage time from ``x`` to ``y`` over paths inside ``window``."""
    y = tuple(int(c) for c in y)
    if not window.contains(y):
        raise InvalidWindow("target vertex outside window")
    st, t, settled = _run(g, params, x, window, 0, y, 0)
    return PassageResult(t if st == K.FPP_FOUND else None, settled, f"vertex {y}", STATUS[st])


def hyperplane_time(g: GraphSpec, params: FieldParams, u, n: int, window: Window) -> PassageResult:
    """Minimum time from the origin to the half-space ``<x, u> >= n`` inside ``window``."""
    u = normalize_direction(u)
    st, t, settled = _run(g, params, (0,) * g.d, window, 1, u, n)
    return PassageResult(t if st == K.FPP_FOUND else None, settled, f"H_{n}{u}", STATUS[st])


def passage_times(g: GraphSpec, p: float, x, y, window: Window, reps: int, seed: int = 0,
                  threads: int | None = None) -> np.ndarray:
    """``t(x, y)`` inside ``window`` for replicas ``0..reps-1``; ``-1`` marks unreachable."""
    y = tuple(int(c) for c in y)
    x = as_vertex(x, g.d)
    if not (window.contains(y) and window.contains(tuple(x))):
        raise InvalidWindow("endpoints must lie in the window")
    st, t, _ = run_replicas(
        K.dijkstra_batch, seed, reps, threads, float(p), g.dirs_array, x,
        *window_args(window).as_tuple(), np.int64(0), np.asarray(y, dtype=np.int64), np.int64(0), _NO_BUDGET)
    return np.where(st == K.FPP_FOUND, t, -1)


@dataclass
class ScaleStat:
    n: int
    reps: int
    mean: float
    ci_low: float
    ci_high: float
    unreachable_rate: float
    ratios: np.ndarray = field(repr=False, default=None)
    times: np.ndarray = field(repr=False, default=None)


@dataclass
class MuEstimate:
    """Largest-scale ratio is the point estimate; subadditivity makes it biased upwards."""

    target: tuple
    scales: list
    mu_hat: float
    ci: tuple
    is_zero: bool
    valid: bool
    kind: str = "mu"
    warnings: list = field(default_factory=list)
    increment: tuple | None = None

    @property
    def n_ladder(self):
        return [s.n for s in self.scales]

    def rows(self) -> list:
        return [[" ".join(map(str, self.target)), s.n, s.reps, s.mean, s.ci_low, s.ci_high,
                 s.unreachable_rate] for s in self.scales]


BEstimate = MuEstimate


def _batch_times(g, p, window, mode, target, level, reps, seed, threads):
    st, t, _ = run_replicas(
        K.dijkstra_batch, seed, reps, threads, float(p), g.dirs_array, np.zeros(g.d, dtype=np.int64),
        *window_args(window).as_tuple(), np.int64(mode), np.asarray(target, dtype=np.int64),
        np.int64(level), _NO_BUDGET)
    return st, t


def _scale_stat(n, st, t, level):
    ok = st == K.FPP_FOUND
    ratios = t[ok] / n
    if ratios.size:
        mean, lo, hi, _ = mean_interval(ratios, level)
    else:
        mean = lo = hi = float("nan")
    return ScaleStat(n, st.size, mean, lo, hi, float(1 - ok.mean()), ratios,
                     np.where(ok, t, -1))


def _increment(a: ScaleStat, b: ScaleStat, level):
    """Paired ``(t_b - t_a) / (n_b - n_a)`` over replicas reaching both targets.

    The common field makes the pair positively correlated, and the
    difference cancels the bounded offset that keeps ``t / n`` above zero
    for directions of zero speed.
    """
    both = (a.times >= 0) & (b.times >= 0)
    if both.sum() < 2:
        return None
    return mean_interval((b.times[both] - a.times[both]) / (b.n - a.n), level)[:3]


def _summarize(target, scales, kind, warn, level=0.95):
    top = scales[-1]
    valid = all(s.unreachable_rate <= INVALID_UNREACHABLE_RATE for s in scales)
    if not valid:
        warn.append("unreachable rate above 1%: targets may not be reachable from the origin")
    mu = max(0.0, top.mean) if not math.isnan(top.mean) else float("nan")
    zero = bool(top.ci_low <= 0 <= top.ci_high and mu < ZERO_THRESHOLD) if not math.isnan(mu) else False
    for msg in warn:
        warnings.warn(msg, stacklevel=3)
    inc = _increment(scales[-2], top, level) if len(scales) > 1 else None
    return MuEstimate(target, scales, mu, (top.ci_low, top.ci_high), zero, valid, kind, warn, inc)


def estimate_mu(g: GraphSpec, p: float, x, n_ladder, reps: int = 200, seed: int = 0,
                window_factor: int = DEFAULT_WINDOW_FACTOR, level: float = 0.95,
                threads: int | None = None) -> MuEstimate:
    """Replica means of ``t(0, n x) / n`` over a ladder of scales."""
    x = tuple(int(c) for c in x)
    if len(x) != g.d or not any(x):
        raise InvalidArgument("x must be a nonzero vector of the graph dimension")
    warn = []
    if not generates_zd(g, 2):
        warn.append("directions do not generate Z^d within radius 2; mu may be undefined")
    scales = []
    for n in sorted(int(n) for n in n_ladder):
        span = max(abs(c) for c in x) * n
        window = Window.box(g.d, max(1, window_factor * span))
        st, t = _batch_times(g, p, window, 0, [c * n for c in x], 0, reps, seed, threads)
        scales.append(_scale_stat(n, st, t, level))
    return _summarize(x, scales, "mu", warn, level)


def estimate_b(g: GraphSpec, p: float, u, n_ladder, reps: int = 200, seed: int = 0,
               window_factor: int = DEFAULT_WINDOW_FACTOR, level: float = 0.95,
               threads: int | None = None) -> MuEstimate:
    """Replica means of ``t(0, H_n(u)) / n`` over a ladder of scales."""
    u = normalize_direction(u)
    if len(u) != g.d:
        raise InvalidArgument("direction dimension mismatch")
    scales = []
    for n in sorted(int(n) for n in n_ladder):
        window = Window.box(g.d, max(1, window_factor * n))
        st, t = _batch_times(g, p, window, 1, u, n, reps, seed, threads)
        scales.append(_scale_stat(n, st, t, level))
    return _summarize(u, scales, "b", [], level)


def scale_csv(estimates) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCALE_HEADER)
    for est in estimates:
        w.writerows(est.rows())
    return buf.getvalue()


@dataclass
class DecayConstants:
    S: FiniteSet
    p: float
    u: tuple
    alpha: float
    K: float
    M_u: int
    method: str
    grid: list = field(default_factory=list, repr=False)

    @property
    def c(self) -> float:
        return math.log(1 / self.K) / (self.alpha * self.M_u)

    def predicted(self, n: int, c_used: float) -> float:
        """Bound on ``P(t(0, H_n(u)) <= c_used n)`` implied by the constants.

        Chernoff at rate ``alpha`` with ``E exp(-alpha t(0, H_n)) <=
        K^(n/M_u - 1) / (1 - K)`` gives ``exp(-alpha' n) / (K (1 - K))``.
        """
        rate = math.log(1 / self.K) / self.M_u - self.alpha * c_used
        return min(1.0, math.exp(-rate * n) / (self.K * (1 - self.K)))

    def to_json(self) -> str:
        return json.dumps({"S": [list(v) for v in sorted(self.S.vertices)], "p": self.p, "u": list(self.u),
                           "alpha": self.alpha, "K": self.K, "M_u": self.M_u, "c": self.c,
                           "method": self.method, "grid": self.grid})


class _ExactTimes:
    """Exact ``E[exp(-alpha T_x)]`` for restricted passage times ``T_x`` inside ``S``."""

    def __init__(self, g, S, p):
        task = _task(g, S, cap=EXACT_DECAY_CAP)
        counts, _ = passage_counts(task, (0,) * g.d)
        w = binomial_weights(task.m, p)
        m = task.m
        # law of T_x as a float vector over t = 0..m (mass at m + 1 means unreachable)
        self.law = {}
        for x in S.vertices:
            row = counts[task.index[x]]
            self.law[x] = np.array([float(sum((int(c) * wk for c, wk in zip(row[t], w)), 0))
                                    for t in range(m + 1)])

    def mgf(self, x, alpha):
        law = self.law[x]
        return float(np.dot(law, np.exp(-alpha * np.arange(law.size))))


def decay_constants(g: GraphSpec, S: FiniteSet, p: float, u, alpha_grid, mode: str = "auto",
                    reps: int = 20000, seed: int = 0, select: str = "min_k",
                    threads: int | None = None) -> DecayConstants:
    """``K_{S,alpha} = sum over boundary edges of E exp(-alpha t_S(x, y))`` on a grid of ``alpha``.

    ``t_S(x, y)`` is the edge time plus the passage time from the origin to
    ``x`` through ``S``.  ``select="min_k"`` keeps the grid point with the
    smallest ``K``; ``"max_c"`` keeps the one with the largest rate ``c``.
    Raises :class:`NoCertificate` when ``K >= 1`` on the whole grid.
    """
    u = normalize_direction(u)
    bnd = boundary(g, S)
    M_u = max(sum(a * b for a, b in zip(e.head, u)) for e in bnd)
    if M_u <= 0:
        raise InvalidArgument("boundary of S does not advance along u")
    alphas = sorted(float(a) for a in alpha_grid)
    if not alphas or alphas[0] <= 0:
        raise InvalidArgument("alpha grid must be positive and nonempty")
    n_edges = len(S) * g.m
    if mode == "auto":
        mode = "exact" if n_edges <= EXACT_DECAY_CAP else "mc"
    pf = float(as_fraction(p))
    if mode == "exact":
        if n_edges > EXACT_DECAY_CAP:
            raise CapExceeded(f"{n_edges} edges exceed the exact cap {EXACT_DECAY_CAP}")
        times = _ExactTimes(g, S, p)
        ks = [(pf + (1 - pf) * math.exp(-a)) * sum(times.mgf(e.tail, a) for e in bnd) for a in alphas]
    elif mode == "mc":
        window = Window.from_set(S.vertices)
        args = window_args(window).as_tuple()
        params = FieldParams(seed, p)
        origin = np.zeros(g.d, dtype=np.int64)
        exits = []
        for r in range(reps):
            k0, k1 = params.replica(r).key
            _, _, _, _, _, et = K.dijkstra_one(
                k0, k1, float(p), g.dirs_array, origin, *args, np.int64(2), origin, np.int64(0),
                False, False, _NO_BUDGET, False, True)
            exits.append(et)
        ks = [float(np.mean([np.exp(-a * et).sum() for et in exits])) for a in alphas]
    else:
        raise InvalidArgument(f"unknown mode {mode!r}")
    grid = [[a, k] for a, k in zip(alphas, ks)]
    good = [(a, k) for a, k in zip(alphas, ks) if k < 1]
    if not good:
        raise NoCertificate(f"K >= 1 for every alpha in the grid (min K = {min(ks):.4g})")
    if select == "min_k":
        a, k = min(good, key=lambda ak: ak[1])
    elif select == "max_c":
        a, k = max(good, key=lambda ak: math.log(1 / ak[1]) / ak[0])
    else:
        raise InvalidArgument(f"unknown selection rule {select!r}")
    return DecayConstants(S, float(p), u, a, k, int(M_u), mode, grid)


@dataclass
class TimeDecayRow:
    n: int
    threshold: float
    reps: int
    hits: int
    estimate: float
    ci_low: float
    ci_high: float
    predicted: float
    flag: bool

    def row(self) -> list:
        return [self.n, self.threshold, self.reps, self.hits, self.estimate, self.ci_low, self.ci_high,
                self.predicted, int(self.flag)]


def verify_time_decay(g: GraphSpec, const: DecayConstants, n_range, c_used: float, reps: int = 2000,
                      seed: int = 0, window_factor: int = DEFAULT_WINDOW_FACTOR, level: float = 0.95,
                      threads: int | None = None) -> list:
    """Monte Carlo ``P(t(0, H_n(u)) <= c_used n)`` against the predicted bound.

    Replicas that cannot reach the half-space inside the window count as
    ``t > c_used n``.  A row is flagged when the lower interval bound exceeds
    the prediction.
    """
    if not 0 <= c_used < const.c:
        raise InvalidArgument(f"c_used must lie in [0, {const.c:.4g})")
    rows = []
    for n in n_range:
        window = Window.box(g.d, max(1, window_factor * n))
        st, t = _batch_times(g, const.p, window, 1, const.u, n, reps, seed, threads)
        hits = int(np.sum((st == K.FPP_FOUND) & (t <= c_used * n)))
        lo, hi = wilson_interval(hits, reps, level)
        pred = const.predicted(n, c_used)
        rows.append(TimeDecayRow(n, c_used * n, reps, hits, hits / reps, lo, hi, pred, lo > pred))
    return rows


def time_decay_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIME_DECAY_HEADER)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()
