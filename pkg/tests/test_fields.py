"""Tests for connections, geodesics, gradients, Laplacians and curvature."""

import math

import numpy as np
import pytest

from finslerlab import jets
from finslerlab.errors import BadN, CriticalPoint, LeftChart, ZeroVector
from finslerlab.fields import (
    ScalarField,
    bochner_terms,
    connection,
    differential,
    geodesic_shoot,
    gradient,
    hessian,
    laplacian,
    ricci,
    weighted_ricci,
)
from finslerlab.norms import (
    dual_norm,
    euclidean,
    interval,
    metric_tensor,
    randers,
    riemannian,
    torus,
)

TWO_PI = 2 * np.pi


def conformal_metric():
    lam = lambda x: 0.1 * jets.sin(x[0])

    def a(x):
        e = jets.exp(2.0 * lam(x))
        return [[e, 0.0], [0.0, e]]

    return riemannian(a, 2)


@pytest.fixture(scope="module")
def randers_torus():
    def b(x):
        return [0.3 * jets.sin(x[1]), 0.0]

    return randers(np.eye(2), b, 2, chart=torus([TWO_PI, TWO_PI]))


# -- connection ----------------------------------------------------------------


def test_connection_flat_euclidean_zero():
    cd = connection(euclidean(2), [0.4, -0.2], [0.7, 0.3])
    assert np.abs(cd.gamma).max() == 0.0
    assert np.abs(cd.spray).max() == 0.0
    assert np.abs(cd.chern).max() == 0.0


def test_connection_conformal_levi_civita_oracle():
    nf = conformal_metric()
    x0, v0 = [0.4, -0.2], [0.7, 0.3]
    cd = connection(nf, x0, v0)
    lam_x = np.array([0.1 * np.cos(x0[0]), 0.0])
    expect = np.zeros((2, 2, 2))
    for i in range(2):
        for j in range(2):
            for k in range(2):
                expect[i, j, k] = (
                    (i == j) * lam_x[k] + (i == k) * lam_x[j] - (j == k) * lam_x[i]
                )
    np.testing.assert_allclose(cd.gamma, expect, atol=1e-8)
    # Riemannian: Chern coefficients equal the Christoffel symbols
    np.testing.assert_allclose(cd.chern, cd.gamma, atol=1e-9)


def test_connection_minkowski_randers_flat():
    rd = randers(np.eye(2), [0.5, 0.0], 2)
    cd = connection(rd, [1.0, 2.0], [0.7, 0.3])
    assert np.abs(cd.spray).max() <= 1e-14
    assert np.abs(cd.chern).max() <= 1e-14


def test_nonlinear_connection_contracts_to_spray(randers_torus):
    v = np.array([0.8, -0.5])
    cd = connection(randers_torus, [0.7, 1.9], v)
    scale = max(1.0, np.abs(cd.spray).max())
    assert np.abs(cd.nonlinear @ v - cd.spray).max() / scale <= 1e-9


def test_connection_zero_vector(randers_torus):
    with pytest.raises(ZeroVector):
        connection(randers_torus, [0.0, 0.0], [0.0, 0.0])


# -- geodesics -------------------------------------------------------------------


def test_geodesic_minkowski_straight_line():
    rd = randers(np.eye(2), [0.5, 0.0], 2)
    traj = geodesic_shoot(rd, [0.0, 0.0], [1.0, 0.5], 1.0, 1e-2)
    np.testing.assert_allclose(traj[-1].x, [1.0, 0.5], atol=1e-10)


def test_geodesic_step_halving_richardson():
    nf = conformal_metric()
    a = geodesic_shoot(nf, [0.4, -0.2], [0.7, 0.3], 1.0, 0.02)
    b = geodesic_shoot(nf, [0.4, -0.2], [0.7, 0.3], 1.0, 0.01)
    assert np.abs(a[-1].x - b[-1].x).max() <= 1e-8


def test_geodesic_constant_speed():
    nf = conformal_metric()
    x0, v0 = [0.4, -0.2], [0.7, 0.3]
    F0 = float(nf.F(x0, v0))
    traj = geodesic_shoot(nf, x0, v0, 1.0, 0.01)
    drift = max(abs(float(nf.F(list(s.x), list(s.v))) - F0) for s in traj)
    assert drift <= 1e-8


def test_geodesic_leaves_interval_chart():
    nf = euclidean(1, chart=interval(1.0))
    with pytest.raises(LeftChart):
        geodesic_shoot(nf, [0.0], [1.0], 2.0, 0.01)


# -- gradient / Hessian / Laplacian ----------------------------------------------


def test_gradient_euclidean_linear():
    np.testing.assert_allclose(
        gradient(euclidean(2), ScalarField(lambda x: x[0]), [0.3, 0.8]), [1.0, 0.0]
    )


def test_gradient_zero_at_critical_point():
    u = ScalarField(lambda x: x[0] * x[0] + x[1] * x[1])
    np.testing.assert_array_equal(gradient(euclidean(2), u, [0.0, 0.0]), [0.0, 0.0])


def test_gradient_norm_equals_dual_norm():
    rd = randers(np.eye(2), [0.5, 0.0], 2)
    u = ScalarField(lambda x: x[0])
    g = gradient(rd, u, [0.2, -0.4])
    assert float(rd.F([0.2, -0.4], list(g))) == pytest.approx(
        dual_norm(rd, [0.2, -0.4], [1.0, 0.0]), rel=1e-10
    )


def test_hessian_euclidean_quadratic():
    Q = np.array([[2.0, 0.5], [0.5, 1.0]])
    u = ScalarField(
        lambda x: 0.5 * (Q[0, 0] * x[0] * x[0] + 2 * Q[0, 1] * x[0] * x[1]
                         + Q[1, 1] * x[1] * x[1])
    )
    np.testing.assert_allclose(hessian(euclidean(2), u, [1.0, 0.4]), Q, atol=1e-12)


def test_hessian_critical_point_raises():
    u = ScalarField(lambda x: x[0] * x[0] + x[1] * x[1])
    with pytest.raises(CriticalPoint):
        hessian(euclidean(2), u, [0.0, 0.0])


def test_hessian_g_symmetry(randers_torus):
    u = ScalarField(lambda x: jets.sin(x[0]) + jets.cos(x[1]))
    x0 = [0.9, 2.2]
    H = hessian(randers_torus, u, x0)
    g = metric_tensor(randers_torus, x0, gradient(randers_torus, u, x0))
    gH = g @ H
    assert np.abs(gH - gH.T).max() <= 1e-8


def test_hessian_matches_fd_covariant_derivative(randers_torus):
    u = ScalarField(lambda x: jets.sin(x[0]) + jets.cos(x[1]))
    x0 = np.array([0.9, 2.2])
    H = hessian(randers_torus, u, x0)
    grad0 = gradient(randers_torus, u, x0)
    conn = connection(randers_torus, list(x0), list(grad0))
    h = 1e-4
    fd = np.zeros((2, 2))
    for j in range(2):
        e = np.eye(2)[j] * h
        gp = gradient(randers_torus, u, x0 + e)
        gm = gradient(randers_torus, u, x0 - e)
        fd[:, j] = (gp - gm) / (2 * h)
    expected = fd + np.einsum("ijk,k->ij", conn.chern, grad0)
    np.testing.assert_allclose(H, expected, atol=1e-6)


def test_laplacian_euclidean_quadratic():
    u = ScalarField(lambda x: 0.5 * (x[0] * x[0] + x[1] * x[1]))
    assert laplacian(euclidean(2), u, [0.5, 0.7]) == pytest.approx(2.0, rel=1e-12)


def test_laplacian_gaussian_drift_oracle():
    K = 1.0
    nf = euclidean(2, weight=lambda x: -0.5 * K * (x[0] * x[0] + x[1] * x[1]))
    u = ScalarField(lambda x: x[0])
    for xt in ([0.3, -0.8], [1.1, 0.2]):
        assert laplacian(nf, u, xt) == pytest.approx(-K * xt[0], rel=1e-12)


def test_laplacian_weak_form_on_torus():
    rd = randers(np.eye(2), [0.3, 0.0], 2, chart=torus([TWO_PI, TWO_PI]))
    u = ScalarField(lambda x: jets.sin(x[0]) + jets.cos(x[1]))
    phis = [
        lambda x: jets.sin(x[0]),
        lambda x: jets.cos(x[1]),
        lambda x: jets.sin(x[0] + x[1]),
        lambda x: jets.cos(2 * x[0]),
        lambda x: jets.sin(x[1]) * jets.cos(x[0]),
    ]
    m = 20
    xs = (np.arange(m) + 0.5) * TWO_PI / m
    w = (TWO_PI / m) ** 2
    lap = np.zeros((m, m))
    grads = np.zeros((m, m, 2))
    for i, x1 in enumerate(xs):
        for j, x2 in enumerate(xs):
            lap[i, j] = laplacian(rd, u, [x1, x2])
            grads[i, j] = gradient(rd, u, [x1, x2])
    for phi in phis:
        pv = np.zeros((m, m))
        dp = np.zeros((m, m, 2))
        for i, x1 in enumerate(xs):
            for j, x2 in enumerate(xs):
                X = jets.seed([x1, x2])
                U = phi(X)
                pv[i, j] = jets.value_of(U.value)
                dp[i, j] = [jets.value_of(c) for c in U.grad]
        lhs = np.sum(pv * lap) * w
        rhs = -np.sum(np.einsum("ijk,ijk->ij", dp, grads)) * w
        assert abs(lhs - rhs) <= 1e-4


# -- curvature ---------------------------------------------------------------------


def test_ricci_flat_minkowski_zero():
    rd = randers(np.eye(2), [0.5, 0.0], 2)
    assert abs(ricci(rd, [0.4, 1.0], [0.7, 0.3])) <= 1e-12


def test_ricci_conformal_gauss_curvature_oracle():
    nf = conformal_metric()
    v0 = [0.7, 0.3]
    for x0 in ([0.4, -0.2], [1.2, 0.5]):
        lam0 = 0.1 * math.sin(x0[0])
        k_gauss = 0.1 * math.sin(x0[0]) * math.exp(-2 * lam0)  # -e^{-2l} lap(l)
        F2 = float(nf.F(x0, v0)) ** 2
        r = ricci(nf, x0, v0)
        assert r == pytest.approx(k_gauss * F2, rel=1e-5)


def test_ricci_two_homogeneous():
    nf = conformal_metric()
    r1 = ricci(nf, [0.4, -0.2], [0.7, 0.3])
    r2 = ricci(nf, [0.4, -0.2], [1.4, 0.6])
    assert r2 == pytest.approx(4 * r1, rel=1e-9)


def test_weighted_ricci_lebesgue_zero():
    nf = euclidean(2)
    assert weighted_ricci(nf, [0.1, 0.2], [0.5, 0.3], math.inf) == pytest.approx(
        0.0, abs=1e-10
    )
    assert weighted_ricci(nf, [0.1, 0.2], [0.5, 0.3], 5.0) == pytest.approx(
        0.0, abs=1e-10
    )


def test_weighted_ricci_gaussian_oracle():
    nf = euclidean(2, weight=lambda x: -0.5 * (x[0] * x[0] + x[1] * x[1]))
    for v in ([1.0, 0.0], [0.7, -0.4]):
        wr = weighted_ricci(nf, [0.3, 0.1], v, math.inf)
        assert wr == pytest.approx(float(np.dot(v, v)), abs=1e-5)


def test_weighted_ricci_monotone_in_dimension():
    nf = euclidean(2, weight=lambda x: -0.5 * (x[0] * x[0] + x[1] * x[1]))
    x, v = [0.3, 0.1], [0.7, -0.4]
    w_inf = weighted_ricci(nf, x, v, math.inf)
    for N in (3.0, 5.0, 20.0):
        assert w_inf >= weighted_ricci(nf, x, v, N) - 1e-12


def test_weighted_ricci_bad_dimension_parameter():
    nf = euclidean(2)
    with pytest.raises(BadN):
        weighted_ricci(nf, [0.0, 0.0], [1.0, 0.0], 1.0)


# -- pointwise curvature identity ---------------------------------------------------


def test_bochner_identity_sample(randers_torus):
    u = ScalarField(lambda x: jets.sin(x[0]) + 0.5 * jets.cos(x[1]))
    pts = [(0.3, 0.15), (1.8, 2.6), (4.0, 5.2), (2.4, 0.9)]
    for x1, x2 in pts:
        bt = bochner_terms(randers_torus, u, [x1, x2])
        lhs = bt["lin_lap_F2_half"] - bt["d_lap_grad"]
        rhs = bt["ric_inf"] + bt["hs_sq"]
        scale = 1.0 + abs(bt["ric_inf"]) + abs(bt["hs_sq"])
        assert abs(lhs - rhs) / scale <= 1e-4
        # the two Hilbert-Schmidt routes agree
        assert abs(bt["hs_sq"] - bt["hs_sq_eigen"]) <= 1e-8 * (1 + bt["hs_sq"])
        # sharpened pointwise bound: 4 F^2 |H|^2 >= dF^2(grad^V F^2)
        assert 4 * bt["F2"] * bt["hs_sq"] - bt["dF2_quad"] >= -1e-8


def test_differential_matches_closure():
    u = ScalarField(lambda x: x[0] * x[0] * x[1])
    d = [jets.value_of(c) for c in differential(u, [1.5, -2.0])]
    np.testing.assert_allclose(d, [2 * 1.5 * -2.0, 1.5**2], rtol=1e-12)
