from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from orperc.cones import (Cone, RaySample, ShapeApprox, barrier_cone, bg_probe, default_probe_rays,
                          recession_cone, sample_shape)
from orperc.errors import InvalidArgument
from orperc.graph_model import example_model, oriented_line

G1 = example_model(1)


def cones(d):
    vec = st.lists(st.integers(-4, 4), min_size=d, max_size=d).filter(any)
    return st.lists(vec, min_size=0, max_size=5).map(lambda gs: Cone(d, generators=gs))


def in_hull(gens, x):
    """Independent membership: x is a nonnegative combination of ``gens``."""
    if not gens:
        return not any(x)
    A = np.array([[float(c) for c in g] for g in gens]).T
    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=np.array(x, dtype=float), bounds=(0, None))
    return res.status == 0


@given(st.sampled_from([2, 3]).flatmap(cones))
def test_polar_involution(C):
    assert C.polar().polar() == C


@given(st.sampled_from([2, 3]).flatmap(cones))
def test_cone_meets_polar_only_at_zero(C):
    assert C.intersect(C.polar()).is_zero


@given(cones(3), st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_membership_matches_lp(C, x):
    gens = C._gens
    assert C.contains(x) == in_hull(gens, x)


@given(cones(2))
def test_polar_pairing(C):
    for g in C.generators:
        for h in C.polar().generators:
            assert sum(a * b for a, b in zip(g, h)) <= 0


def test_half_plane_and_quadrant():
    Q = Cone(2, generators=[(1, 0), (0, 1)])
    assert Q.polar() == Cone(2, generators=[(-1, 0), (0, -1)])
    assert Q.interior_contains((1, 1)) and not Q.interior_contains((1, 0))
    H = Cone(2, inequalities=[(0, -1)])
    assert H.contains((-5, 0)) and H.contains((3, 2)) and not H.contains((0, -1))
    assert H.polar() == Cone(2, generators=[(0, -1)])
    assert H.dimension == 2 and not H.is_full
    assert Cone.full(2).polar().is_zero and Cone.zero(3).polar().is_full


def test_json_roundtrip_exact():
    C = Cone(2, generators=[(Fraction(1, 3), 1), (-1, 2)])
    D = Cone.from_json(C.to_json())
    assert D == C


def test_dimension_guard():
    with pytest.raises(InvalidArgument):
        Cone(5, generators=[(1, 0, 0, 0, 0)])
    with pytest.raises(InvalidArgument):
        Cone(2, generators=[(1, 0, 0)])


def test_default_probe_rays():
    rays = default_probe_rays()
    assert len(rays) == 16 and len(set(rays)) == 16
    assert (0, 1) in rays and (2, 2) not in rays


def _shape(zero_rays, rays):
    samples = [RaySample(r, 0.0 if r in zero_rays else 0.2, 0.0 if r in zero_rays else 0.1,
                         0.0 if r in zero_rays else 0.3, True) for r in rays]
    return ShapeApprox(0.5, samples, 1e-3)


def test_recession_and_barrier_from_samples():
    rays = default_probe_rays()
    shape = _shape({(1, 1), (0, 1), (-1, 1)}, rays)
    rc = recession_cone(shape)
    assert rc == Cone(2, generators=[(1, 1), (-1, 1)])
    bar = barrier_cone(shape)
    assert bar == Cone(2, generators=[(1, -1), (-1, -1)])
    assert bar.interior_contains((0, -1)) and not bar.interior_contains((1, 0))


def test_sample_shape_extremes():
    # the steps generate the plane, so at p=1 every vertex is at time zero
    shape = sample_shape(G1, 1.0, default_probe_rays(), scale=8, reps=5)
    assert recession_cone(shape).is_full and barrier_cone(shape).is_zero
    shape = sample_shape(G1, 0.0, default_probe_rays(), scale=8, reps=5)
    assert recession_cone(shape, permissive=True).is_zero and barrier_cone(shape).is_full


def test_bg_probe_line():
    line = oriented_line()
    assert bg_probe(line, 0.5, (1,), ns=(4, 8, 12, 16), reps=4000, seed=1).verdict == "bounded-evidence"
    assert bg_probe(line, 1.0, (1,), ns=(4, 8), reps=50).verdict == "unbounded-evidence"
    v = bg_probe(line, 0.0, (1,), ns=(4, 8), reps=2000)
    assert v.verdict == "bounded-evidence" and v.method.endswith("all-zero")
