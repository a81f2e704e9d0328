import numpy as np
import pytest
from hypothesis import given, strategies as st

from shrinker_lab.variations import TrigTerm, VariationParseError, parse_trig, parse_variation


def test_parse_kinds():
    assert parse_variation("meanCurvature").kind == "meanCurvature"
    assert parse_variation("form:1,-1").coeffs == (1.0, -1.0)
    assert parse_variation('function:"cos(t1)"').terms == (TrigTerm(1.0, "cos", (1,)),)


def test_parse_trig_terms():
    terms = parse_trig("0.5*sin(2t1 - t2) - cos(t1 + 3*t2) + 1")
    assert terms == (TrigTerm(0.5, "sin", (2, -1)), TrigTerm(-1.0, "cos", (1, 3)), TrigTerm(1.0, "const", ()))
    assert parse_trig("-cos(-t2)") == (TrigTerm(-1.0, "cos", (0, -1)),)


@pytest.mark.parametrize("text", ["function:cos(t0)", "function:cos(x)", "form:a,1", "sideways",
                                  "function:cos(1.5t1)", "function:", "function:cos(t1", "wave:1",
                                  "function:cos(t1) sin(t2)", "form:"])
def test_parse_errors(text):
    with pytest.raises(VariationParseError):
        parse_variation(text)


@given(a=st.integers(-5, 5), b=st.integers(-5, 5), c=st.floats(-10, 10, allow_nan=False).map(lambda v: round(v, 3)))
def test_potential_evaluation(a, b, c):
    spec = parse_variation(f"function:{c}*cos({a}*t1+{b}*t2) + sin(t2)")
    t1, t2 = np.meshgrid(np.linspace(0, 6, 5), np.linspace(0, 6, 7), indexing="ij")
    expected = c * np.cos(a * t1 + b * t2) + np.sin(t2)
    np.testing.assert_allclose(spec.potential([t1, t2]), expected, atol=1e-12)
