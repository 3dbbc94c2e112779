import csv
import io
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orperc.cluster import (SWEEP_HEADER, directional_survival, estimate_pc, explore, normalize_direction,
                            parse_grid, survival_ladder, sweep, sweep_csv)
from orperc.errors import InvalidArgument, InvalidBracket, InvalidWindow
from orperc.graph_model import Window, example_model, oriented_line
from orperc.random_field import FieldParams
from orperc.stats import wilson_interval

G1 = example_model(1)
LINE = oriented_line()


def test_normalize_direction():
    assert normalize_direction((0, -3)) == (0, -1)
    assert normalize_direction((4, 6)) == (2, 3)
    assert normalize_direction((0.5, 0.25)) == (2, 1)
    with pytest.raises(InvalidArgument):
        normalize_direction((0, 0))


def test_explore_closed_field():
    rep = explore(G1, FieldParams(3, 0.0), (0, 0), Window.box(2, 5), 100, [(0, 1)])
    assert rep.visited_count == 1
    assert rep.termination == "exhausted"
    assert rep.extent == {(0, 1): 0}


def test_explore_open_field_fills_window():
    rep = explore(G1, FieldParams(3, 1.0), (0, 0), Window.box(2, 3), 10**6, [(0, 1), (0, -1)])
    assert rep.visited_count == 49
    assert rep.termination == "window_hit"
    assert rep.extent == {(0, 1): 3, (0, -1): 3}


def test_explore_budget():
    rep = explore(G1, FieldParams(3, 1.0), (0, 0), Window.box(2, 10), 7)
    assert rep.visited_count == 7 and rep.termination == "budget_hit"


def test_explore_is_breadth_first_and_deterministic():
    a = explore(G1, FieldParams(11, 0.6), (0, 0), Window.box(2, 20), 10**6)
    b = explore(G1, FieldParams(11, 0.6), (0, 0), Window.box(2, 20), 10**6)
    assert np.array_equal(a.vertices, b.vertices)
    assert tuple(a.vertices[0]) == (0, 0)
    # every later vertex has an open in-edge from an earlier one
    seen = {tuple(a.vertices[0])}
    for v in map(tuple, a.vertices[1:]):
        assert any(tuple(np.subtract(v, d)) in seen for d in G1.dirs)
        seen.add(v)


def test_explore_errors():
    with pytest.raises(InvalidWindow):
        explore(G1, FieldParams(0, 0.5), (9, 9), Window.box(2, 2), 10)
    with pytest.raises(InvalidArgument):
        explore(G1, FieldParams(0, 0.5), (0, 0), Window.box(2, 2), 0)


@pytest.mark.parametrize("n", [3, 6])
def test_line_survival_matches_power(n):
    pt = directional_survival(LINE, (1,), 0.6, n, reps=20000, seed=5, level=0.999)
    assert pt.ci_low <= 0.6**n <= pt.ci_high


def test_line_tilted_estimator_is_unbiased():
    pt = directional_survival(LINE, (1,), 0.5, 12, reps=4000, seed=2, tilt=0.9)
    assert abs(pt.theta_hat - 0.5**12) < 0.1 * 0.5**12


def test_window_must_reach_level():
    with pytest.raises(InvalidWindow):
        directional_survival(LINE, (1,), 0.5, 10, window=Window.box(1, 4))


@given(st.integers(0, 2**32), st.floats(0.2, 0.8), st.floats(0.0, 0.15))
def test_survival_monotone_in_p(seed, p, dp):
    a = survival_ladder(G1, (0, 1), p, [4, 8], reps=60, seed=seed)
    b = survival_ladder(G1, (0, 1), min(1.0, p + dp), [4, 8], reps=60, seed=seed)
    for x, y in zip(a, b):
        assert not np.any(x.outcomes & ~y.outcomes)


def test_ladder_is_nested_in_n():
    pts = survival_ladder(G1, (0, 1), 0.5, [4, 8, 16, 32], reps=400, seed=9)
    for lo, hi in zip(pts, pts[1:]):
        assert not np.any(hi.outcomes & ~lo.outcomes)


def test_thread_count_does_not_change_results():
    a = survival_ladder(G1, (0, 1), 0.5, [8, 16], reps=300, seed=4, threads=1)
    b = survival_ladder(G1, (0, 1), 0.5, [8, 16], reps=300, seed=4, threads=3)
    for x, y in zip(a, b):
        assert np.array_equal(x.outcomes, y.outcomes)


def test_wilson_interval_contains_estimate():
    for s, n in [(0, 10), (10, 10), (3, 17), (500, 1000)]:
        lo, hi = wilson_interval(s, n, 0.95)
        assert 0 <= lo <= s / n <= hi <= 1


def test_sweep_csv_schema():
    pts = sweep(G1, (0, 1), [0.3, 0.6], [4, 8], reps=50, seed=1)
    rows = list(csv.reader(io.StringIO(sweep_csv(pts))))
    assert rows[0] == SWEEP_HEADER
    assert len(rows) == 5
    assert [float(r[0]) for r in rows[1:]] == [0.3, 0.3, 0.6, 0.6]


def test_parse_grid():
    assert len(parse_grid("0.05:0.30:0.025")) == 11
    assert parse_grid("0.1,0.2") == [0.1, 0.2]
    assert parse_grid("0:1:0.5") == [0.0, 0.5, 1.0]
    with pytest.raises(InvalidArgument):
        parse_grid("0:1:0")


def test_pc_on_line_brackets_power_threshold():
    # survival p^10 crosses tau=0.05 at p = 0.05 ** 0.1
    est = estimate_pc(LINE, (1,), 10, tau=0.05, reps=2000, seed=3, width=0.02)
    target = 0.05 ** 0.1
    assert est.p_lo - 0.02 <= target <= est.p_hi + 0.02
    assert est.p_hi - est.p_lo <= 0.02 or not est.decided


def test_pc_bracket_errors():
    with pytest.raises(InvalidBracket):
        estimate_pc(LINE, (1,), 10, p_bracket=(0.9, 0.95), reps=200)
    with pytest.raises(InvalidBracket):
        estimate_pc(LINE, (1,), 10, p_bracket=(0.5, 0.5))
