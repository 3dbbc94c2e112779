from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orperc.errors import CapExceeded, InvalidArgument
from orperc.graph_model import SubadditiveWeight, example_model, oriented_line
from orperc.sharp_transition import (DECAY_HEADER, FiniteSet, PhiPolynomial, boundary, decay_csv,
                                     escape_probability, find_good_set, internal_edge_count, phi,
                                     restricted_connectivity, sublevel_set, theta_lower_bound, verify_decay)

G1 = example_model(1)
UP = SubadditiveWeight.linear((0, 1))
DOWN = SubadditiveWeight.linear((0, -1))


def test_finite_set_requires_origin():
    with pytest.raises(InvalidArgument):
        FiniteSet.of([(1, 0)])
    S = FiniteSet.of([(0, 0), (0, -1)], UP)
    assert (0, -1) in S and len(S) == 2 and S.psi_sup == 0


def test_sublevel_set_by_hand():
    # steps (0,-1), (-1,1), (0,1), (1,1); {y <= 0} in the box of radius 1 is two full rows
    S = sublevel_set(G1, UP, 0, cap=1)
    assert S.vertices == {(x, y) for x in (-1, 0, 1) for y in (-1, 0)}
    # row y=0: 3 upward steps each; row y=-1: 3 downward steps plus the two sideways exits at x=+-1
    bnd = boundary(G1, S)
    assert len(bnd) == 14
    assert internal_edge_count(G1, S) == 10
    assert [e.tail for e in bnd] == sorted(e.tail for e in bnd)


def test_phi_singleton_is_p_times_outdegree():
    S = FiniteSet.of([(0, 0)])
    assert PhiPolynomial(G1, S)(Fraction(1, 10)) == Fraction(4, 10)


def test_phi_two_point_set_hand_value():
    # boundary: 3 edges from 0 and 3 edges from (0,-1), which 0 reaches with prob p
    S = FiniteSet.of([(0, 0), (0, -1)])
    assert PhiPolynomial(G1, S)(Fraction(1, 10)) == Fraction(33, 100)
    res = phi(G1, S, 0.1)
    assert res.method == "exact" and res.exact == Fraction(33, 100)


def test_phi_mc_agrees_with_exact():
    S = sublevel_set(G1, UP, 0, cap=1)
    ex = phi(G1, S, 0.3, mode="exact")
    mc = phi(G1, S, 0.3, mode="mc", reps=20000, seed=2, level=0.999)
    assert mc.ci_low <= ex.value <= mc.ci_high


def test_phi_cap():
    S = sublevel_set(G1, DOWN, 0, cap=3)
    with pytest.raises(CapExceeded):
        phi(G1, S, 0.1, mode="exact", cap=5)


@given(st.fractions(0, 1))
def test_phi_polynomial_monotone(p):
    S = sublevel_set(G1, UP, 0, cap=1)
    poly = PhiPolynomial(G1, S)
    assert poly(p) <= poly(min(Fraction(1), p + Fraction(1, 20)))


def test_restricted_connectivity_exact_vs_mc():
    S = sublevel_set(G1, UP, 0, cap=1)
    for x in [(1, -1), (0, -2), (2, 0)]:
        ex = restricted_connectivity(G1, S, 0.5, x)
        mc = restricted_connectivity(G1, S, 0.5, x, mode="mc", reps=4000, seed=1)
        assert abs(ex - mc) < 4 * np.sqrt(ex * (1 - ex) / 4000) + 1e-9
    assert restricted_connectivity(G1, S, 0.5, (0, 0)) == 1.0
    with pytest.raises(InvalidArgument):
        restricted_connectivity(G1, S, 0.5, (5, 5))


def test_find_good_set_line():
    cert = find_good_set(oriented_line(), SubadditiveWeight.linear((1,)), 0.5, 3, 5)
    assert cert is not None and cert.k == 0 and cert.phi.value == 0.5
    assert cert.predicted(3) == 0.125


def test_find_good_set_none_when_supercritical():
    assert find_good_set(G1, DOWN, 0.9, 1, 3, reps=500) is None


def test_find_good_set_rejects_nonlinear():
    psi = SubadditiveWeight.max_of_linear([(0, 1), (1, 0)])
    with pytest.raises(InvalidArgument):
        find_good_set(G1, psi, 0.1, 1, 2)


def test_escape_probability_line_exact():
    # on the oriented line the cluster leaves {x <= l} iff the first l+1 edges are open
    psi = SubadditiveWeight.linear((1,))
    hits = escape_probability(oriented_line(), psi, 0.5, 3, 20000, 4)
    assert abs(hits / 20000 - 0.5**4) < 4 * np.sqrt(0.0625 * 0.9375 / 20000)


def test_verify_decay_smoke():
    cert = find_good_set(G1, DOWN, 0.1, 2, 6, reps=4000, seed=1)
    assert cert is not None
    rows = verify_decay(G1, cert, range(1, 4), reps=3000, seed=3)
    assert not any(r.flag for r in rows)
    assert decay_csv(rows).splitlines()[0] == ",".join(DECAY_HEADER)


def test_theta_lower_bound():
    assert theta_lower_bound(0.5, 0.5) == 0
    assert theta_lower_bound(0.6, 0.4) == pytest.approx(0.2 / (0.6 * 0.6))
    with pytest.raises(InvalidArgument):
        theta_lower_bound(0.3, 0.4)
