"""Exploration of oriented clusters, directional survival and critical points.

``D_u(x0)`` is the largest value of ``<y - x0, u>`` over the open cluster of
``x0``.  Survival at level ``n`` is the finite-size proxy ``D_u(0) >= n``
evaluated inside a box of radius ``c_W * n``; replicas that touch the box
without reaching level ``n`` count as failures and are reported through
``boundary_flag_rate``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels as K
from ._engine import as_vertex, run_replicas, window_args, window_volume
from .errors import InvalidArgument, InvalidBracket, InvalidWindow
from .graph_model import GraphSpec, Window
from .random_field import FieldParams
from .stats import mean_interval, wilson_interval

TERMINATIONS = {K.TERM_EXHAUSTED: "exhausted", K.TERM_WINDOW: "window_hit", K.TERM_BUDGET: "budget_hit"}
SWEEP_HEADER = ["p", "n", "reps", "successes", "theta_hat", "ci_low", "ci_high", "boundary_flag_rate"]
DEFAULT_CW = 4


def normalize_direction(u) -> tuple:
    """Primitive integer vector on the ray of ``u`` (rationals are accepted)."""
    fr = [Fraction(c).limit_denominator(10**9) if isinstance(c, float) else Fraction(c) for c in u]
    if not any(fr):
        raise InvalidArgument("direction must be nonzero")
    den = math.lcm(*(f.denominator for f in fr))
    ints = [int(f * den) for f in fr]
    g = math.gcd(*ints)
    return tuple(i // g for i in ints)


@dataclass
class ClusterReport:
    visited_count: int
    extent: dict
    termination: str
    vertices: np.ndarray | None = field(default=None, repr=False)


def explore(g: GraphSpec, params: FieldParams, x0, window: Window, budget: int, probes=()) -> ClusterReport:
    """Breadth-first enumeration of the open cluster of ``x0`` inside ``window``.

    Edges are followed only when open and with both endpoints in the window.
    Out-edges are examined in ``g.dirs`` order and each vertex is visited at
    its first arrival, so the report is a pure function of ``(seed, p)``.
    """
    x0 = as_vertex(x0, g.d)
    if not window.contains(tuple(x0)):
        raise InvalidWindow("start vertex outside window")
    if budget < 1:
        raise InvalidArgument("budget must be >= 1")
    probes = [normalize_direction(u) for u in probes]
    probe_arr = np.array(probes, dtype=np.int64).reshape(len(probes), g.d)
    k0, k1 = params.key
    m = g.m
    count, ext, term, _, _, _, verts = K.explore_one(
        k0, k1, np.full(m, params.p), g.dirs_array, np.arange(m, dtype=np.int64), x0,
        *window_args(window).as_tuple(), np.int64(budget), probe_arr, False,
        np.zeros(g.d, dtype=np.int64), np.int64(0), False, np.zeros(m), np.zeros(m))
    return ClusterReport(int(count), {u: int(e) for u, e in zip(probes, ext)}, TERMINATIONS[int(term)], verts)


@dataclass
class SweepPoint:
    p: float
    n: int
    reps: int
    successes: int
    theta_hat: float
    ci_low: float
    ci_high: float
    boundary_flag_rate: float = 0.0
    method: str = "plain"
    outcomes: np.ndarray | None = field(default=None, repr=False)

    def row(self) -> list:
        return [self.p, self.n, self.reps, self.successes, self.theta_hat, self.ci_low,
                self.ci_high, self.boundary_flag_rate]


def default_window(g: GraphSpec, n: int, c_w: int = DEFAULT_CW) -> Window:
    return Window.box(g.d, max(1, c_w * n))


def _check_reachable_level(window: Window, u: tuple, n: int):
    reach = sum(abs(c) * r for c, r in zip(u, window.radius))
    if reach < n:
        raise InvalidWindow(f"window of radius {window.radius} cannot reach level {n} along {u}")


def _survival_batch(g, u, p, level, window, reps, seed, threads, tilt=None, budget=None):
    u = normalize_direction(u)
    if len(u) != g.d:
        raise InvalidArgument("direction dimension mismatch")
    _check_reachable_level(window, u, level)
    m = g.m
    dirs = g.dirs_array
    gain = dirs @ np.array(u, dtype=np.int64)
    # greedy depth-first order: most progress along u is explored first
    order = np.argsort(gain, kind="stable").astype(np.int64)
    probs = np.full(m, float(p))
    lo_open = np.zeros(m)
    lo_closed = np.zeros(m)
    if tilt is not None:
        up = gain > 0
        probs[up] = tilt
        with np.errstate(divide="ignore"):
            lo_open[up] = np.log(p / tilt) if p > 0 else -np.inf
            lo_closed[up] = np.log((1 - p) / (1 - tilt)) if p < 1 else -np.inf
    if budget is None:
        budget = window_volume(window)
    origin = np.zeros(g.d, dtype=np.int64)
    probe = np.array([u], dtype=np.int64)
    counts, ext, terms, _, goals, loglr = run_replicas(
        K.explore_batch, seed, reps, threads, probs, dirs, order, origin,
        *window_args(window).as_tuple(), np.int64(budget), probe, True,
        np.array(u, dtype=np.int64), np.int64(level), True, lo_open, lo_closed)
    return ext[:, 0], terms, goals, loglr


def directional_survival(g: GraphSpec, u, p: float, n: int, window: Window | None = None,
                         reps: int = 1000, seed: int = 0, level: float = 0.95,
                         threads: int | None = None, tilt: float | None = None) -> SweepPoint:
    """Estimate ``P_p(D_u(0) >= n)``; replica ``r`` uses ``replica_seed(seed, r)``.

    With ``tilt`` set, edges that make progress along ``u`` are sampled with
    probability ``tilt`` instead of ``p`` and each replica is reweighted by its
    likelihood ratio over the revealed edges (importance sampling).  The
    estimate targets the same windowed event; the interval is then a normal
    interval on the weighted mean instead of a Wilson interval.
    """
    if n < 1:
        raise InvalidArgument("threshold n must be >= 1")
    if window is None:
        window = default_window(g, n)
    return survival_ladder(g, u, p, [n], window, reps, seed, level, threads, tilt)[0]


def survival_ladder(g: GraphSpec, u, p: float, ns, window: Window | None = None, reps: int = 1000,
                    seed: int = 0, level: float = 0.95, threads: int | None = None,
                    tilt: float | None = None) -> list:
    """Survival at several thresholds sharing one window.

    Plain estimates come from one batch, so the indicators are nested
    replica by replica.  Tilted estimates run one goal-stopped batch per
    threshold, so each likelihood ratio covers only the edges revealed
    before that threshold is first reached.
    """
    ns = [int(n) for n in ns]
    if window is None:
        window = default_window(g, max(ns))
    if not 0 <= p <= 1:
        raise InvalidArgument("p must lie in [0, 1]")
    top = max(ns)
    if tilt is None:
        ext, terms, _, _ = _survival_batch(g, u, p, top, window, reps, seed, threads)
    out = []
    for n in ns:
        if tilt is not None:
            ext, terms, _, loglr = _survival_batch(g, u, p, n, window, reps, seed, threads, tilt)
        ok = ext >= n
        flagged = float(np.mean((~ok) & (terms == K.TERM_WINDOW)))
        if tilt is None:
            s = int(ok.sum())
            lo, hi = wilson_interval(s, reps, level)
            out.append(SweepPoint(p, n, reps, s, s / reps, lo, hi, flagged, "plain", ok))
        else:
            w = np.where(ok, np.exp(loglr), 0.0)
            mean, lo, hi, _ = mean_interval(w, level)
            out.append(SweepPoint(p, n, reps, int(ok.sum()), mean, max(0.0, min(lo, mean)),
                                  min(1.0, max(hi, mean)), flagged, f"tilted({tilt})", ok))
    return out


def sweep(g: GraphSpec, u, p_grid, ns, reps: int, seed: int, window: Window | None = None,
          threads: int | None = None) -> list:
    points = []
    for p in p_grid:
        points.extend(survival_ladder(g, u, p, ns, window, reps, seed, threads=threads))
    return points


def sweep_csv(points) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for pt in points:
        w.writerow(pt.row())
    return buf.getvalue()


def parse_grid(text: str) -> list:
    """``lo:hi:step`` (inclusive of ``hi`` up to rounding) or a comma list."""
    if ":" in text:
        lo, hi, step = (Fraction(s) for s in text.split(":"))
        if step <= 0:
            raise InvalidArgument("grid step must be positive")
        count = int((hi - lo) / step) + 1
        return [float(lo + i * step) for i in range(count)]
    return [float(s) for s in text.split(",") if s]


@dataclass
class PcEstimate:
    u: tuple
    n: int
    tau: float
    p_lo: float
    p_hi: float
    reps: int
    decided: bool = True
    history: list = field(default_factory=list, repr=False)


def _decide(g, u, p, n, tau, reps, seed, window, threads, max_reps):
    """+1 if survival is clearly above tau, -1 if clearly below, 0 undecided."""
    r = reps
    while True:
        pt = directional_survival(g, u, p, n, window, r, seed, threads=threads)
        if pt.ci_low > tau:
            return 1, pt
        if pt.ci_high < tau:
            return -1, pt
        if r >= max_reps:
            return 0, pt
        r = min(4 * r, max_reps)


def estimate_pc(g: GraphSpec, u, n: int, tau: float = 0.05, reps: int = 400, seed: int = 0,
                p_bracket=(0.0, 1.0), width: float = 0.005, window: Window | None = None,
                threads: int | None = None) -> PcEstimate:
    """Bracket ``p_c(u)`` by bisection on the survival curve at level ``n``.

    A midpoint moves ``p_hi`` down when the Wilson interval lies above ``tau``
    and ``p_lo`` up when it lies below.  An undecided midpoint is retried
    once with four times the replicas; if still undecided the search stops
    and the last decided bracket is returned with ``decided=False``.
    """
    if not 0 < tau < 1:
        raise InvalidArgument("tau must lie in (0, 1)")
    lo, hi = map(float, p_bracket)
    if not lo < hi:
        raise InvalidBracket("need p_lo < p_hi")
    u = normalize_direction(u)
    if window is None:
        window = default_window(g, n)
    max_reps = 4 * reps
    history = []
    s_lo, pt = _decide(g, u, lo, n, tau, reps, seed, window, threads, max_reps)
    history.append(pt)
    s_hi, pt = _decide(g, u, hi, n, tau, reps, seed, window, threads, max_reps)
    history.append(pt)
    if s_lo != -1 or s_hi != 1:
        raise InvalidBracket(f"bracket ({lo}, {hi}) does not straddle tau={tau}")
    decided = True
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        s, pt = _decide(g, u, mid, n, tau, reps, seed, window, threads, max_reps)
        history.append(pt)
        if s > 0:
            hi = mid
        elif s < 0:
            lo = mid
        else:
            decided = False
            break
    return PcEstimate(u, n, tau, lo, hi, reps, decided, history)


def pc_ladder(g: GraphSpec, u, ns, **kw) -> list:
    """Raw brackets for a ladder of thresholds (no extrapolation is attempted)."""
    return [estimate_pc(g, u, n, **kw) for n in ns]
