import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nswlb.errors import ValidationError
from nswlb.latency import (Constant, Polynomial, Scaled, check_quasi_log_convex, from_dict, g_log, monomial,
                           parse_spec, scaled)


def test_polynomial_eval():
    f = Polynomial((1, 0, 2))
    assert f(3.0) == 19.0
    assert np.allclose(f(np.array([0.0, 1.0])), [1.0, 3.0])
    assert f.degree == 2


@pytest.mark.parametrize("coeffs", [(), (0, 0), (1, -1), (float("nan"),)])
def test_polynomial_rejects(coeffs):
    with pytest.raises(ValidationError):
        Polynomial(coeffs)


def test_constant_rejects_non_positive():
    with pytest.raises(ValidationError):
        Constant(0)


def test_scaled_matches_definition():
    f = Scaled(3.0, 0.5, monomial(2))
    assert math.isclose(f(4.0), 3.0 * 4.0)
    assert math.isclose(float(f.log(4.0)), math.log(12.0))
    assert f.quasi_log_convex


def test_scaled_shortcut():
    f = monomial(1)
    assert scaled(f) is f


@pytest.mark.parametrize("spec", ["poly:0,1", "poly:1,0,2.5", "const:3"])
def test_spec_round_trip(spec):
    f = parse_spec(spec)
    assert f.to_spec() == spec
    assert from_dict(f.to_dict()) == f


@pytest.mark.parametrize("spec", ["exp:1", "poly:a", "const:-1", "poly:"])
def test_bad_spec(spec):
    with pytest.raises(ValidationError):
        parse_spec(spec)


def test_g_log_zero_convention():
    assert g_log(monomial(1), 0.0) == 0.0
    assert math.isclose(float(g_log(monomial(1), 2.0)), 2 * math.log(2))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 5), min_size=1, max_size=5).filter(lambda c: any(x > 0 for x in c)))
def test_polynomials_are_quasi_log_convex(coeffs):
    f = Polynomial(tuple(coeffs))
    assert f.quasi_log_convex
    assert check_quasi_log_convex(f)


def test_chord_test_detects_non_convex():
    from conftest import Ramp

    f = Ramp()
    assert not f.quasi_log_convex
    assert not check_quasi_log_convex(f, np.linspace(1.0, 3.0, 41))
