import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sprayforge.errors import DomainViolation, NonIntegerExponent, ParseError, UnknownVariable
from sprayforge.expr import VarLayout, evaluate, evaluate_many, parse_expr, to_text, variables

LAY2 = VarLayout(2)


def test_layout_names_and_sizes():
    assert VarLayout(2).names == ["x1", "x2", "y1_1", "y1_2"]
    assert VarLayout(1, 3).size == 4
    assert VarLayout(2, side="cotangent").names == ["x1", "x2", "p1", "p2"]
    with pytest.raises(ValueError):
        VarLayout(2, 2, side="cotangent")


def test_evaluate_matches_python():
    e = parse_expr("(1 + x1^2)*y1^2 + sin(x2)*y2 - exp(-x1)/2", LAY2)
    u = np.array([0.3, -0.7, 1.2, 0.4])
    ref = (1 + 0.09) * 1.44 + math.sin(-0.7) * 0.4 - math.exp(-0.3) / 2
    assert evaluate(e, u) == pytest.approx(ref, rel=1e-15)


def test_params_are_folded():
    e = parse_expr("q*y2^2", LAY2, {"q": 3.0})
    assert evaluate(e, [0, 0, 0, 2.0]) == 12.0


def test_short_velocity_names():
    # y1 is accepted as y1_1 on first-order layouts
    a = parse_expr("y1^2 + y2", LAY2)
    b = parse_expr("y1_1^2 + y1_2", LAY2)
    assert evaluate(a, [0, 0, 2, 3]) == evaluate(b, [0, 0, 2, 3])


def test_parse_error_offset():
    with pytest.raises(ParseError) as info:
        parse_expr("y1^2 + * y2", LAY2)
    assert info.value.offset == 7


def test_unknown_variable_named():
    with pytest.raises(UnknownVariable) as info:
        parse_expr("x3 + y1", LAY2)
    assert info.value.name == "x3"


def test_non_integer_exponent():
    with pytest.raises(NonIntegerExponent):
        parse_expr("y1^1.5", LAY2)


@pytest.mark.parametrize("text", ["log(x1 - 1)", "sqrt(x1 - 1)", "1/(x1 - 0.5)"])
def test_domain_violation(text):
    e = parse_expr(text, LAY2)
    with pytest.raises(DomainViolation):
        evaluate(e, [0.5, 0, 0, 0])


def test_variables_and_text_round_trip():
    e = parse_expr("x1*y1_2 + cos(x2)", LAY2)
    assert variables(e) == {0, 1, 3}
    again = parse_expr(to_text(e), LAY2)
    u = [0.2, 0.3, 0.4, 0.5]
    assert evaluate(again, u) == evaluate(e, u)


def test_evaluate_many_matches_scalar():
    e = parse_expr("x1^3 - 2*x2*y1 + y2^2", LAY2)
    pts = np.random.default_rng(0).normal(size=(7, 4))
    assert np.allclose(evaluate_many(e, pts), [evaluate(e, p) for p in pts], rtol=0, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_polynomial_identity(u):
    a = parse_expr("(x1 + y1)^2", LAY2)
    b = parse_expr("x1^2 + 2*x1*y1 + y1^2", LAY2)
    assert evaluate(a, u) == pytest.approx(evaluate(b, u), abs=1e-12)
