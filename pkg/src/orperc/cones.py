"""Polyhedral cones, the empirical limit shape and bounded-growth probes.

Cone algebra is exact over the rationals.  A cone keeps a generator list
(positive hull) and an inequality list (rows ``a`` with ``<a, x> <= 0``);
either is derived from the other on demand by enumerating extreme rays.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .cluster import normalize_direction, survival_ladder
from .errors import InvalidArgument
from .fpp import estimate_mu
from .graph_model import GraphSpec, Window
from .stats import loglinear_fit

MAX_DIM = 4
ZERO_TOL = 1e-3
BG_HI = 0.02
BG_LO = 0.005
BG_R2 = 0.9
SCAN_HEADER = ["ray", "in_int_bar", "bg_at_p", "bg_at_q", "flag"]
BOUNDED, UNBOUNDED, INCONCLUSIVE = "bounded-evidence", "unbounded-evidence", "inconclusive"


def _vec(v) -> tuple:
    return tuple(Fraction(c) for c in v)


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def _primitive(v) -> tuple:
    """Positive multiple of ``v`` with coprime integer entries."""
    den = math.lcm(*(c.denominator for c in v))
    ints = [int(c * den) for c in v]
    g = math.gcd(*ints)
    return tuple(Fraction(i // g) for i in ints)


def _nullspace(rows, d: int) -> list:
    """Basis of ``{x : <r, x> = 0 for r in rows}`` by exact row reduction."""
    mat = [list(r) for r in rows]
    pivots = []
    r = 0
    for col in range(d):
        piv = next((i for i in range(r, len(mat)) if mat[i][col] != 0), None)
        if piv is None:
            continue
        mat[r], mat[piv] = mat[piv], mat[r]
        inv = 1 / mat[r][col]
        mat[r] = [v * inv for v in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][col] != 0:
                f = mat[i][col]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(col)
        r += 1
        if r == len(mat):
            break
    basis = []
    for free in (c for c in range(d) if c not in pivots):
        v = [Fraction(0)] * d
        v[free] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -mat[i][free]
        basis.append(tuple(v))
    return basis


def _rank(rows, d: int) -> int:
    return d - len(_nullspace(rows, d))


def _extreme_rays(ineqs, d: int) -> list:
    """Generators of ``{x : <a, x> <= 0 for a in ineqs}``.

    Lines are returned as opposite pairs; the remaining rays come from
    ``d - 1`` independent active constraints in the complement of the lines.
    """
    rows = [a for a in ineqs if any(a)]
    lines = _nullspace(rows, d)
    gens = []
    for b in lines:
        b = _primitive(b)
        gens.extend([b, tuple(-c for c in b)])
    need = d - 1 - len(lines)
    if need < 0:
        return gens
    seen = set()
    for sub in itertools.combinations(range(len(rows)), need):
        active = [rows[i] for i in sub] + lines
        if _rank(active, d) != d - 1:
            continue
        (r,) = _nullspace(active, d)
        for cand in (r, tuple(-c for c in r)):
            if all(_dot(a, cand) <= 0 for a in rows):
                key = _primitive(cand)
                if key not in seen:
                    seen.add(key)
                    gens.append(key)
    return gens


def _frac_pair(c: Fraction) -> list:
    return [c.numerator, c.denominator]


class Cone:
    """Rational polyhedral cone.  Give generators, inequalities, or both."""

    def __init__(self, d: int, generators=None, inequalities=None):
        if not 1 <= d <= MAX_DIM:
            raise InvalidArgument(f"cone algebra supports 1 <= d <= {MAX_DIM}")
        if generators is None and inequalities is None:
            raise InvalidArgument("need generators or inequalities")
        self.d = d
        self._gens = None if generators is None else [_vec(g) for g in generators if any(g)]
        self._ineqs = None if inequalities is None else [_vec(a) for a in inequalities if any(a)]
        for v in (self._gens or []) + (self._ineqs or []):
            if len(v) != d:
                raise InvalidArgument("vector dimension mismatch")

    @classmethod
    def zero(cls, d: int) -> "Cone":
        return cls(d, generators=[])

    @classmethod
    def full(cls, d: int) -> "Cone":
        return cls(d, inequalities=[])

    @property
    def generators(self) -> list:
        if self._gens is None:
            self._gens = _extreme_rays(self._ineqs, self.d)
        return self._gens

    @property
    def inequalities(self) -> list:
        if self._ineqs is None:
            # the inequalities of C are the generators of its polar
            self._ineqs = _extreme_rays(self._gens, self.d)
        return self._ineqs

    def polar(self) -> "Cone":
        return Cone(self.d, generators=self.inequalities, inequalities=self.generators)

    def contains(self, x) -> bool:
        x = _vec(x)
        return all(_dot(a, x) <= 0 for a in self.inequalities)

    __contains__ = contains

    def interior_contains(self, x) -> bool:
        """Strict membership; empty for cones that are not full-dimensional."""
        x = _vec(x)
        return all(_dot(a, x) < 0 for a in self.inequalities)

    def issubset(self, other: "Cone") -> bool:
        return all(other.contains(g) for g in self.generators)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Cone):
            return NotImplemented
        return self.d == other.d and self.issubset(other) and other.issubset(self)

    __hash__ = None

    def intersect(self, other: "Cone") -> "Cone":
        return Cone(self.d, inequalities=self.inequalities + other.inequalities)

    @property
    def is_zero(self) -> bool:
        return not self.generators

    @property
    def is_full(self) -> bool:
        return not self.inequalities

    @property
    def dimension(self) -> int:
        return _rank(self.generators, self.d) if self.generators else 0

    def to_json(self) -> str:
        return json.dumps({"generators": [[_frac_pair(c) for c in g] for g in self.generators],
                           "inequalities": [[_frac_pair(c) for c in a] for a in self.inequalities]})

    @classmethod
    def from_json(cls, text: str) -> "Cone":
        obj = json.loads(text)
        rows = obj.get("generators") or obj.get("inequalities") or []
        if not rows:
            raise InvalidArgument("cannot infer dimension from an empty cone description")
        d = len(rows[0])
        conv = lambda vs: [[Fraction(n, q) for n, q in v] for v in vs]  # noqa: E731
        return cls(d, conv(obj["generators"]) if "generators" in obj else None,
                   conv(obj["inequalities"]) if "inequalities" in obj else None)

    def __repr__(self):
        fmt = lambda vs: [tuple(str(c) for c in v) for v in vs]  # noqa: E731
        return f"Cone(d={self.d}, generators={fmt(self.generators)})"


def default_probe_rays(d: int = 2) -> list:
    """Primitive integer vectors with entries in ``-2..2`` (16 of them in the plane)."""
    rays = set()
    for v in itertools.product(range(-2, 3), repeat=d):
        if any(v) and math.gcd(*v) == 1:
            rays.add(v)
    return sorted(rays, key=lambda v: math.atan2(v[1], v[0]) if d == 2 else v)


@dataclass
class RaySample:
    ray: tuple
    mu_hat: float
    ci_low: float
    ci_high: float
    valid: bool
    increment: tuple | None = None

    def possibly_zero(self, tol: float) -> bool:
        """Compatible with zero speed: either interval reaches below ``tol``."""
        return self.ci_low < tol or (self.increment is not None and self.increment[1] < tol)

    def surely_zero(self, tol: float) -> bool:
        return self.ci_high < tol


@dataclass
class ShapeApprox:
    p: float
    rays: list
    zero_tol: float = ZERO_TOL
    scale: int = 0
    partial: bool = False

    @property
    def d(self) -> int:
        return len(self.rays[0].ray)

    def rows(self) -> list:
        return [[" ".join(map(str, r.ray)), r.mu_hat, r.ci_low, r.ci_high,
                 *(r.increment or (float("nan"),) * 3), int(r.valid), self.zero_tol] for r in self.rays]


def sample_shape(g: GraphSpec, p: float, ray_set, scale: int = 64, reps: int = 100, seed: int = 0,
                 zero_tol: float = ZERO_TOL, window_factor: int = 2, threads: int | None = None) -> ShapeApprox:
    """``mu_hat`` of every ray at ``scale``, plus the paired increment from ``scale // 2``.

    ``partial`` marks a non-spanning ray set or rays with unreachable targets.
    """
    rays = [tuple(int(c) for c in r) for r in ray_set]
    if not rays:
        raise InvalidArgument("ray set is empty")
    out = []
    for r in rays:
        ladder = [scale] if scale < 2 else [scale // 2, scale]
        est = estimate_mu(g, p, r, ladder, reps, seed, window_factor, threads=threads)
        lo, hi = est.ci
        out.append(RaySample(r, est.mu_hat, lo, hi, est.valid, est.increment))
    spans = Cone(g.d, generators=rays).is_full
    return ShapeApprox(p, out, zero_tol, scale, partial=not spans or not all(s.valid for s in out))


def recession_cone(shape: ShapeApprox, permissive: bool = False) -> Cone:
    """Positive hull of rays whose speed interval lies below ``zero_tol``.

    With ``permissive`` a ray qualifies when its ratio or increment interval
    merely reaches below ``zero_tol``, giving the largest cone compatible
    with the samples.
    """
    tol = shape.zero_tol
    pick = [s.ray for s in shape.rays if s.valid
            and (s.possibly_zero(tol) if permissive else s.surely_zero(tol))]
    return Cone(shape.d, generators=pick)


def barrier_cone(shape: ShapeApprox, permissive: bool = False) -> Cone:
    """Polar of the recession cone.

    ``permissive=False`` uses the strict recession cone and so returns the
    largest barrier cone; pass ``True`` for the smallest one.
    """
    return recession_cone(shape, permissive).polar()


@dataclass
class BGVerdict:
    u: tuple
    p: float
    verdict: str
    theta_top: float
    ci_low: float
    ci_high: float
    r2: float | None
    method: str
    ladder: list = field(default_factory=list, repr=False)


def bg_probe(g: GraphSpec, p: float, u, ns=(16, 32, 64, 128), window: Window | None = None,
             reps: int = 2000, seed: int = 0, thresholds=(BG_HI, BG_LO), r2_min: float = BG_R2,
             tilt: float | None = None, threads: int | None = None) -> BGVerdict:
    """Verdict on whether the cluster stays bounded along ``u``.

    Unbounded when the top-level survival is clearly above the high
    threshold; bounded when clearly below the low one and ``log theta_n`` is
    linear in ``n`` with ``R^2 >= r2_min``.  The fit uses the plain estimates
    when at least three levels have successes, otherwise an importance
    sampled ladder with progress edges tilted to ``tilt``.
    """
    u = normalize_direction(u)
    hi_thr, lo_thr = thresholds
    ns = sorted(int(n) for n in ns)
    ladder = survival_ladder(g, u, p, ns, window, reps, seed, threads=threads)
    top = ladder[-1]
    if top.ci_low > hi_thr:
        return BGVerdict(u, p, UNBOUNDED, top.theta_hat, top.ci_low, top.ci_high, None, "plain", ladder)
    if top.ci_high >= lo_thr:
        return BGVerdict(u, p, INCONCLUSIVE, top.theta_hat, top.ci_low, top.ci_high, None, "plain", ladder)
    method = "plain"
    values = [pt.theta_hat for pt in ladder]
    if sum(pt.successes > 0 for pt in ladder) < 3:
        t = tilt if tilt is not None else default_tilt(p)
        fit_ladder = survival_ladder(g, u, p, ns, window, reps, seed, threads=threads, tilt=t)
        values = [pt.theta_hat for pt in fit_ladder]
        method = f"tilted({t})"
        if not any(values):
            # no replica reaches even the lowest level under a favourable tilt
            return BGVerdict(u, p, BOUNDED, top.theta_hat, top.ci_low, top.ci_high, None,
                             method + ",all-zero", ladder)
    fit = loglinear_fit(ns, values)
    if fit is not None and fit.points >= 3 and fit.slope < 0 and fit.r2 >= r2_min:
        return BGVerdict(u, p, BOUNDED, top.theta_hat, top.ci_low, top.ci_high, fit.r2, method, ladder)
    return BGVerdict(u, p, INCONCLUSIVE, top.theta_hat, top.ci_low, top.ci_high,
                     None if fit is None else fit.r2, method, ladder)


def default_tilt(p: float) -> float:
    """Tilted opening probability for progress edges."""
    return max(0.85, (1 + p) / 2)


@dataclass
class ScanRow:
    ray: tuple
    in_int_bar: bool
    in_bar: bool
    bg_at_p: str
    bg_at_q: str
    flag: bool

    def row(self) -> list:
        return [" ".join(map(str, self.ray)), int(self.in_int_bar), self.bg_at_p, self.bg_at_q, int(self.flag)]


@dataclass
class ScanReport:
    p: float
    q: float | None
    rows: list
    shape: ShapeApprox
    bar_inner: Cone
    bar_outer: Cone
    verdicts: dict = field(default_factory=dict, repr=False)

    @property
    def flags(self) -> int:
        return sum(r.flag for r in self.rows)

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SCAN_HEADER)
        for r in self.rows:
            w.writerow(r.row())
        return buf.getvalue()


def conjecture_scan(g: GraphSpec, p: float, probe_rays=None, q: float | None = None, scale: int = 64,
                    mu_reps: int = 100, bg_ns=(16, 32, 64, 128), bg_reps: int = 1000, seed: int = 0,
                    zero_tol: float = ZERO_TOL, threads: int | None = None) -> ScanReport:
    """Per-ray check of the two proven inclusions between barrier cone and bounded growth.

    A ray in the interior of the (smallest) barrier cone must not show
    unbounded growth at ``p``; a ray with bounded growth at ``q > p`` must lie
    in the (largest) barrier cone at ``p``.  ``q`` defaults to ``p + 0.05``
    and is skipped when ``p >= 1``.
    """
    rays = [tuple(int(c) for c in r) for r in (probe_rays or default_probe_rays(g.d))]
    if q is None and p < 1:
        q = min(1.0, round(p + 0.05, 10))
    if q is not None and not q > p:
        raise InvalidArgument("q must exceed p")
    shape = sample_shape(g, p, rays, scale, mu_reps, seed, zero_tol, threads=threads)
    bar_inner = barrier_cone(shape, permissive=True)
    bar_outer = barrier_cone(shape, permissive=False)
    box = Window.box(g.d, max(bg_ns))
    rows, verdicts = [], {}
    for r in rays:
        vp = bg_probe(g, p, r, bg_ns, box, bg_reps, seed, threads=threads)
        vq = bg_probe(g, q, r, bg_ns, box, bg_reps, seed, threads=threads) if q is not None else None
        verdicts[r] = (vp, vq)
        inner = bar_inner.interior_contains(r)
        outer = bar_outer.contains(r)
        flag = (inner and vp.verdict == UNBOUNDED) or (vq is not None and vq.verdict == BOUNDED and not outer)
        rows.append(ScanRow(r, inner, outer, vp.verdict, vq.verdict if vq else "n/a", flag))
    return ScanReport(p, q, rows, shape, bar_inner, bar_outer, verdicts)
