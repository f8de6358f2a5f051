"""Unit tests for the second-order forward-differentiation scalars."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerlab import jets
from finslerlab.jets import Jet2, constant, grad_array, hess_array, seed, value_of


def poly(x, y):
    # generic smooth test function with nontrivial mixed derivatives
    return x * x * y + 3.0 * x * y * y - 2.0 * x + 0.5 * y + 7.0


def poly_grad(x, y):
    return np.array([2 * x * y + 3 * y * y - 2.0, x * x + 6 * x * y + 0.5])


def poly_hess(x, y):
    return np.array([[2 * y, 2 * x + 6 * y], [2 * x + 6 * y, 6 * x]])


def test_polynomial_gradient_and_hessian_exact():
    x0, y0 = 1.3, -0.7
    X, Y = seed([x0, y0])
    out = poly(X, Y)
    assert out.value == pytest.approx(poly(x0, y0))
    np.testing.assert_allclose(grad_array(out), poly_grad(x0, y0), rtol=1e-12)
    np.testing.assert_allclose(hess_array(out), poly_hess(x0, y0), rtol=1e-12)


def test_hessian_symmetric_to_machine_precision():
    X, Y = seed([0.4, 2.1])
    out = jets.exp(X * Y) * jets.sin(X) / (1.0 + Y * Y)
    H = hess_array(out)
    assert np.array_equal(H, H.T)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(-2.0, 2.0),
    st.floats(-2.0, 2.0),
)
def test_product_and_chain_rule_match_analytic(x0, y0):
    # f(x, y) = exp(x*y) * (x^2 + 1): derivatives computed by hand
    X, Y = seed([x0, y0])
    out = jets.exp(X * Y) * (X * X + 1.0)
    e = math.exp(x0 * y0)
    fx = e * (y0 * (x0 * x0 + 1.0) + 2.0 * x0)
    fy = e * x0 * (x0 * x0 + 1.0)
    fxx = e * (y0 * y0 * (x0 * x0 + 1) + 4 * x0 * y0 + 2.0)
    fxy = e * ((x0 * x0 + 1) * (1 + x0 * y0) + 2 * x0 * x0)
    fyy = e * x0 * x0 * (x0 * x0 + 1.0)
    np.testing.assert_allclose(
        grad_array(out), [fx, fy], rtol=1e-12, atol=1e-12
    )
    np.testing.assert_allclose(
        hess_array(out), [[fxx, fxy], [fxy, fyy]], rtol=1e-12, atol=1e-12
    )


def test_division_and_power():
    (X,) = seed([1.7])
    out = (X**3 + 2.0) / X
    # f = x^2 + 2/x, f' = 2x - 2/x^2, f'' = 2 + 4/x^3
    assert out.value == pytest.approx(1.7**2 + 2 / 1.7, rel=1e-14)
    assert value_of(out.grad[0]) == pytest.approx(2 * 1.7 - 2 / 1.7**2, rel=1e-13)
    assert value_of(out.hess[0][0]) == pytest.approx(2 + 4 / 1.7**3, rel=1e-13)


def test_batched_components_broadcast():
    xs = np.linspace(0.2, 1.5, 11)
    ys = np.linspace(-1.0, 1.0, 11)
    X, Y = seed([xs, ys])
    out = poly(X, Y)
    np.testing.assert_allclose(out.value, poly(xs, ys))
    np.testing.assert_allclose(out.grad[0], poly_grad(xs, ys)[0], rtol=1e-12)
    np.testing.assert_allclose(out.hess[1][1], poly_hess(xs, ys)[1][1], rtol=1e-12)


def test_numpy_left_operand_does_not_capture_jet():
    (X,) = seed([2.0])
    out = np.float64(3.0) * X + np.float64(1.0)
    assert isinstance(out, Jet2)
    assert out.value == pytest.approx(7.0)
    assert value_of(out.grad[0]) == pytest.approx(3.0)


def test_nested_jets_give_third_derivatives():
    # f(x) = x^5: f''' = 60 x^2, via an outer jet over an inner jet
    x0 = 1.1
    (inner,) = seed([x0])          # level 1
    (outer,) = seed([inner])       # level 2, value is the inner jet
    out = outer**5
    d2 = out.hess[0][0]            # inner jet carrying d^2/dx^2 of x^5
    assert value_of(d2) == pytest.approx(20 * x0**3, rel=1e-12)
    third = value_of(d2.grad[0])
    assert third == pytest.approx(60 * x0**2, rel=1e-12)


def test_nested_jets_keep_levels_separate():
    # g(x, y) = x^2 * y with x at level 1 and y at level 2: the outer
    # derivative in y must see x as a constant.
    (xin,) = seed([3.0])
    (yout,) = seed([2.0], level=2)
    out = yout * xin * xin
    assert value_of(out.value) == pytest.approx(18.0)
    # d/dy = x^2 carried as an inner jet with d/dx(x^2) = 2x
    assert value_of(out.grad[0]) == pytest.approx(9.0)
    assert value_of(out.grad[0].grad[0]) == pytest.approx(6.0)


def test_constant_has_zero_derivatives():
    c = constant(4.2, 3, 1)
    assert c.m == 3 and all(g == 0.0 for g in c.grad)


def test_where_sign_branches():
    (X,) = seed([-0.5])
    out = jets.where_sign(X, X * 2.0, X * 3.0)
    assert out.value == pytest.approx(-1.5)
    assert value_of(out.grad[0]) == pytest.approx(3.0)
