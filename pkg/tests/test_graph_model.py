from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from orperc.errors import InvalidSpec, InvalidWindow
from orperc.graph_model import (GraphSpec, SubadditiveWeight, Window, bidirectional_line, example_model,
                                generates_zd, make_graph, oriented_line, out_neighbors, psi_eval)


def test_example_model_directions():
    g = example_model(2)
    assert g.d == 2 and g.m == 6
    assert g.dirs == ((0, -1), (-2, 1), (-1, 1), (0, 1), (1, 1), (2, 1))


@pytest.mark.parametrize("d,dirs", [(2, []), (2, [(0, 0)]), (2, [(1, 0), (1, 0)]), (2, [(1,)]), (0, [(1,)])])
def test_invalid_specs(d, dirs):
    with pytest.raises(InvalidSpec):
        make_graph(d, dirs)


def test_invalid_example_model():
    with pytest.raises(InvalidSpec):
        example_model(0)


vectors = st.lists(st.integers(-3, 3), min_size=2, max_size=2).filter(any).map(tuple)


@given(st.lists(vectors, min_size=1, max_size=6, unique=True))
def test_json_round_trip(dirs):
    g = make_graph(2, dirs)
    assert GraphSpec.from_json(g.to_json()) == g


def test_bad_json():
    with pytest.raises(InvalidSpec):
        GraphSpec.from_json('{"d": 2}')


def test_out_neighbors_follow_direction_order():
    assert out_neighbors(example_model(1), (5, 5)) == [(5, 4), (4, 6), (5, 6), (6, 6)]


def test_generates_zd():
    assert generates_zd(example_model(1), 2)
    assert generates_zd(bidirectional_line(), 3)
    assert not generates_zd(oriented_line(), 3)
    assert not generates_zd(make_graph(2, [(1, 0), (0, 1)]), 2)


points = st.lists(st.integers(-20, 20), min_size=3, max_size=3)
forms = st.lists(st.lists(st.fractions(-5, 5, max_denominator=6), min_size=3, max_size=3), min_size=1, max_size=4)


@given(forms, points, points)
def test_max_of_linear_is_subadditive(fs, x, y):
    w = SubadditiveWeight.max_of_linear(fs)
    s = [a + b for a, b in zip(x, y)]
    assert psi_eval(w, s) <= psi_eval(w, x) + psi_eval(w, y)


def test_linear_weight():
    w = SubadditiveWeight.linear((0, -1))
    assert w((3, -7)) == 7
    assert w.u == (0, -1)
    half = SubadditiveWeight.linear((Fraction(1, 2), 0))
    assert half((3, 0)) == Fraction(3, 2)
    forms, den = half.integer_forms
    assert den == 2 and forms.tolist() == [[1, 0]]


def test_window_box_and_psiball():
    w = Window.box(2, 2)
    assert w.kind == "box" and len(w.vertices()) == 25
    assert (2, -2) in w and (3, 0) not in w
    b = Window.psiball(SubadditiveWeight.linear((0, 1)), 0, 2)
    assert b.kind == "psiball"
    assert len(b.vertices()) == 15
    assert (0, 1) not in b


def test_window_from_set():
    w = Window.from_set([(0, 0), (2, -1)])
    assert w.kind == "set" and w.radius == (2, 1)
    assert w.vertices() == [(0, 0), (2, -1)]
    assert (1, 0) not in w


def test_window_guards():
    with pytest.raises(InvalidWindow):
        Window.box(2, -1)
    with pytest.raises(InvalidWindow):
        Window.box(3, 2**30)
    with pytest.raises(InvalidWindow):
        Window.box(2, (1, 2, 3))
    with pytest.raises(InvalidWindow):
        Window.from_set([])
