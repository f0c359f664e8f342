import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from garza import jets as J
from garza.errors import (DerivativeOrderError, JetDomainError, JetMismatchError,
                          ZeroDenominatorError)
from garza.jets import Jet, jet_binary, jet_differentiate, jet_lift

points = st.floats(0.2, 3.0)


def taylor(fn, x0, order):
    """Reference coefficients from high-precision numerical differentiation."""
    with mpmath.workdps(40):
        return np.array([float(v) for v in mpmath.taylor(fn, x0, order)])


def test_basic_lifts():
    x = Jet.variable(0.0, 3)
    np.testing.assert_allclose(J.exp(x).coeffs, [1, 1, 0.5, 1 / 6])
    y = Jet.variable(1.0, 3)
    np.testing.assert_allclose(J.log(y).coeffs, [0, 1, -0.5, 1 / 3])
    np.testing.assert_allclose((1.0 / (1.0 + x)).coeffs, [1, -1, 1, -1])
    np.testing.assert_allclose(((1 - x) * (1 + x)).coeffs, [1, 0, -1, 0])


def test_lift_api_matches_operators():
    a = jet_lift("power", 2.0, 4, alpha=0.5)
    np.testing.assert_allclose(a.coeffs, taylor(mpmath.sqrt, 2.0, 4), rtol=1e-12)
    c = jet_lift("const", np.array([1.0, 2.0]), 2, value=3.0)
    assert c.coeffs.shape == (3, 2)
    np.testing.assert_array_equal(c.coeffs[0], [3.0, 3.0])
    np.testing.assert_array_equal(c.coeffs[1:], 0.0)
    i = jet_lift("integral", 0.5, 3, integrand=J.exp, antiderivative=np.exp)
    np.testing.assert_allclose(i.coeffs, J.exp(Jet.variable(0.5, 3)).coeffs)
    x = jet_lift("identity", 1.5, 2)
    np.testing.assert_allclose(jet_binary("div", x, x).coeffs, [1, 0, 0])
    np.testing.assert_allclose(jet_differentiate(x * x).coeffs, [3.0, 2.0])


@given(points, st.integers(1, 6))
def test_composite_matches_polyfit(x0, order):
    fn = lambda c: c * J.log(c) / (1.0 + c) ** 3
    ref = lambda c: c * mpmath.log(c) / (1 + c) ** 3
    got = fn(Jet.variable(x0, order)).coeffs
    np.testing.assert_allclose(got, taylor(ref, x0, order), rtol=1e-10, atol=1e-13)


@given(points, points, st.integers(0, 5))
def test_division_inverts_multiplication(a, b, order):
    x = Jet.variable(a, order)
    f = J.exp(x) + b
    g = x * x + 1.0
    np.testing.assert_allclose(((f * g) / g).coeffs, f.coeffs, rtol=1e-10, atol=1e-12)


@given(points, st.integers(1, 6))
def test_exp_log_roundtrip(x0, order):
    x = Jet.variable(x0, order)
    np.testing.assert_allclose(J.exp(J.log(x)).coeffs, x.coeffs, rtol=1e-10, atol=1e-12)


@given(st.floats(-2.0, 2.0), st.integers(-4, 6), st.integers(0, 5))
def test_integer_power_is_repeated_product(x0, m, order):
    x = Jet.variable(x0, order) + 0.0
    if m < 0 and abs(x0) < 1e-3:
        return
    expect = Jet.constant(1.0, x)
    for _ in range(abs(m)):
        expect = expect * x
    if m < 0:
        expect = 1.0 / expect
    np.testing.assert_allclose((x ** m).coeffs, expect.coeffs, rtol=1e-9, atol=1e-12)


def test_real_power_agrees_with_integer_route():
    x = Jet.variable(np.array([0.5, 2.0]), 4)
    np.testing.assert_allclose(J.power(x, 3.0).coeffs, (x * x * x).coeffs)
    np.testing.assert_allclose(J.power(x, 2.5).coeffs, (J.sqrt(x) * x * x).coeffs, rtol=1e-12)


def test_differentiate_scales_coefficients():
    x = Jet.variable(0.0, 3)
    d = (1.0 / (1.0 + x)).differentiate()
    np.testing.assert_allclose(d.coeffs, [-1, 2, -3])
    assert d.order == 2
    assert Jet.variable(1.0, 4).derivative(1) == 1.0
    e = J.exp(Jet.variable(0.0, 5))
    assert e.derivative(4) == pytest.approx(1.0)


def test_batch_axes_broadcast():
    c = np.linspace(0.5, 2.0, 7).reshape(7, 1) * np.ones((1, 3))
    out = J.log(Jet.variable(c, 3)) * 2.0
    assert out.coeffs.shape == (4, 7, 3)
    np.testing.assert_allclose(out.value, 2 * np.log(c))


def test_errors():
    with pytest.raises(JetDomainError):
        J.log(Jet.variable(-1.0, 2))
    with pytest.raises(JetDomainError):
        J.power(Jet.variable(-1.0, 2), 0.5)
    with pytest.raises(ZeroDenominatorError):
        x = Jet.variable(1.0, 2)
        x / (x - 1.0)
    with pytest.raises(DerivativeOrderError):
        Jet.variable(1.0, 0).differentiate()
    with pytest.raises(JetMismatchError):
        Jet.variable(1.0, 2) + Jet.variable(1.0, 3)
    with pytest.raises(JetMismatchError):
        Jet.variable(1.0, 2) * Jet.variable(2.0, 2)
    with pytest.raises(ValueError):
        jet_lift("sin", 0.0, 2)
    with pytest.raises(ValueError):
        jet_binary("pow", Jet.variable(1.0, 1), Jet.variable(1.0, 1))


def test_zero_denominator_is_a_zero_division():
    assert issubclass(ZeroDenominatorError, ZeroDivisionError)
    assert math.isfinite((1.0 / Jet.variable(2.0, 1)).coeffs[1])
