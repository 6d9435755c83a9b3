from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from omtla.arith import (NEG_INF, POS_INF, DeltaRational, UndefinedArithmetic, add, ceil, cmp,
                         div, floor, mul, parse_rational, render_rational, render_value)

fractions = st.fractions(min_value=-100, max_value=100, max_denominator=50)
deltas = st.builds(DeltaRational, fractions, fractions)


def test_rational_ops():
    assert add(F(1, 2), F(1, 3)) == F(5, 6)
    assert floor(F(7, 3)) == 2 and ceil(F(7, 3)) == 3
    r = mul(F(-2, 3), F(3, 4))
    assert r == F(-1, 2) and (r.numerator, r.denominator) == (-1, 2)
    assert cmp(F(1), F(2)) == -1


def test_division_by_zero():
    with pytest.raises(UndefinedArithmetic):
        div(F(1), 0)
    with pytest.raises(UndefinedArithmetic):
        DeltaRational(1) / 0


def test_delta_examples():
    assert DeltaRational(0, 1) > DeltaRational(0, 0)
    assert DeltaRational(1, 1).scale(-2) == DeltaRational(-2, -2)
    assert DeltaRational(1, -1) + DeltaRational(1, 1) == DeltaRational(2, 0)


def test_delta_floor_ceil():
    # 3 - eps floors to 2, 3 + eps ceils to 4
    assert DeltaRational(3, -1).floor() == 2
    assert DeltaRational(3, 1).ceil() == 4
    assert DeltaRational(F(5, 2), 1).floor() == 2
    assert DeltaRational(3).ceil() == 3


def test_infinities_order():
    x = DeltaRational(10 ** 9)
    assert NEG_INF < x < POS_INF
    assert -NEG_INF == POS_INF
    assert str(NEG_INF) == "-oo"


def test_render_roundtrip_examples():
    assert render_rational(F(-7, 2)) == "(/ -7 2)"
    assert render_value(DeltaRational(0, 1)) == "(+ 0 (* 1 epsilon))"
    assert parse_rational("(/ 3 4)") == F(3, 4)
    assert parse_rational("(- 5)") == -5
    with pytest.raises(ValueError):
        parse_rational("abc")


@given(fractions)
def test_render_parse_roundtrip(q):
    assert parse_rational(render_rational(q)) == q


@given(deltas, deltas, deltas)
def test_delta_total_order(a, b, c):
    assert (a < b) + (a == b) + (a > b) == 1
    if a <= b and b <= c:
        assert a <= c
    assert (a + c <= b + c) == (a <= b)


@given(deltas, fractions)
def test_scale_positive_preserves_order(a, k):
    if k > 0:
        assert (a.scale(k) > DeltaRational(0)) == (a > DeltaRational(0))


@given(deltas)
def test_floor_ceil_bracket(a):
    assert DeltaRational(a.floor()) <= a <= DeltaRational(a.ceil())
    assert a.ceil() - a.floor() in (0, 1)
