"""Tests for grids, the nonlinear heat flow and its linearized semigroups."""

import numpy as np
import pytest

from finslerlab.errors import NotNormalized, OutOfRange
from finslerlab.heat import (
    adjoint_semigroup,
    assemble_stiffness,
    build_grid,
    dirichlet_energy,
    freeze_diffusion,
    heat_step,
    linearized_semigroup,
    run_flow,
    variance,
)
from finslerlab.norms import asymmetric_1d, euclidean, interval, randers, torus

TWO_PI = 2 * np.pi


@pytest.fixture(scope="module")
def circle():
    nf = euclidean(1, chart=torus([TWO_PI]))
    g = build_grid(nf, 256)
    return nf, g


@pytest.fixture(scope="module")
def circle_trace(circle):
    nf, g = circle
    u0 = np.cos(g.coords[:, 0])
    return run_flow(nf, g, u0, 0.05, 1e-3)


def bump(x, r=2.0, amp=0.9):
    inside = np.abs(x) < r
    z = np.zeros_like(x)
    z[inside] = amp * np.exp(1 - 1 / (1 - (x[inside] / r) ** 2))
    return z


# -- grid -----------------------------------------------------------------------


def test_grid_weights_normalized(circle):
    _, g = circle
    assert g.weights.sum() == pytest.approx(1.0, abs=1e-14)


def test_grid_interval_weights_gaussian():
    K = 1.0
    nf = euclidean(1, chart=interval(6.0), weight=lambda x: -0.5 * K * x[0] * x[0])
    g = build_grid(nf, 512, normalize=False)
    # truncated Gaussian mass: sqrt(2 pi / K) up to < 1e-8 tail
    assert g.weights.sum() == pytest.approx(np.sqrt(2 * np.pi / K), rel=1e-5)


def test_stiffness_summation_by_parts(circle):
    nf, g = circle
    rng = np.random.default_rng(0)
    u, v = rng.normal(size=(2, g.nnodes))
    frozen = freeze_diffusion(g, u)
    K = assemble_stiffness(g, frozen)
    # K annihilates constants and is symmetric: exact discrete integration by parts
    assert np.abs(K @ np.ones(g.nnodes)).max() <= 1e-15
    assert abs(u @ (K @ v) - v @ (K @ u)) <= 1e-12
    # quadratic form equals the explicit link sum
    i_idx, j_idx, _ = g.links[(1,)]
    kap = frozen.kappa[(1,)]
    assert u @ (K @ u) == pytest.approx(float(np.sum(kap * (u[j_idx] - u[i_idx]) ** 2)),
                                        rel=1e-12)


# -- Dirichlet energy -------------------------------------------------------------


def test_energy_constant_zero(circle):
    nf, g = circle
    assert dirichlet_energy(nf, g, np.full(g.nnodes, 3.2)) == pytest.approx(0.0, abs=1e-18)


def test_energy_cosine_benchmark(circle):
    nf, g = circle
    # E(cos) = (1/2) mean(sin^2) = 1/4 under the normalized measure
    u = np.cos(g.coords[:, 0])
    assert dirichlet_energy(nf, g, u) == pytest.approx(0.25, rel=1e-4)


def test_energy_nonnegative(circle):
    nf, g = circle
    rng = np.random.default_rng(1)
    for _ in range(5):
        assert dirichlet_energy(nf, g, rng.normal(size=g.nnodes)) >= 0.0


# -- heat step / flow --------------------------------------------------------------


def test_heat_step_constant_fixed_point(circle):
    nf, g = circle
    u = np.full(g.nnodes, 1.7)
    np.testing.assert_allclose(heat_step(nf, g, u, 1e-3), u, atol=1e-13)


def test_heat_flow_matches_spectral_oracle():
    nf = euclidean(1, chart=torus([TWO_PI]))
    g = build_grid(nf, 512)
    x = g.coords[:, 0]
    tr = run_flow(nf, g, np.cos(x), 0.1, 1e-4)
    assert np.abs(tr.states[-1] - np.exp(-0.1) * np.cos(x)).max() <= 1e-4


def test_positivity_preservation(circle):
    nf, g = circle
    u0 = np.abs(np.sin(g.coords[:, 0]))
    tr = run_flow(nf, g, u0, 0.02, 1e-3)
    assert tr.states.min() >= -1e-12


def test_energy_monotone_and_mass_conserved(circle_trace):
    tr = circle_trace
    assert np.diff(tr.energies).max() <= 1e-12
    mass = tr.states @ tr.grid.weights
    assert np.abs(mass - mass[0]).max() <= 1e-12


def test_two_flows_nonexpansive(circle):
    nf, g = circle
    x = g.coords[:, 0]
    tr1 = run_flow(nf, g, np.cos(x), 0.05, 1e-3)
    tr2 = run_flow(nf, g, 0.7 * np.cos(x) + 0.1 * np.sin(2 * x), 0.05, 1e-3)
    d = np.sqrt((tr1.states - tr2.states) ** 2 @ g.weights)
    assert np.diff(d).max() <= 1e-10


def test_asymmetric_flow_energy_mass_nonexpansion():
    nf = asymmetric_1d(1.0, 2.0, chart=interval(6.0),
                       weight=lambda x: -0.5 * x[0] * x[0])
    g = build_grid(nf, 512)
    x = g.coords[:, 0]
    tr = run_flow(nf, g, bump(x), 0.2, 1e-3)
    assert np.diff(tr.energies).max() <= 1e-12
    mass = tr.states @ g.weights
    assert np.abs(mass - mass[0]).max() <= 1e-12
    tr2 = run_flow(nf, g, np.roll(bump(x), 20), 0.2, 1e-3)
    d = np.sqrt((tr.states - tr2.states) ** 2 @ g.weights)
    assert np.diff(d).max() <= 1e-10


# -- linearized semigroup -----------------------------------------------------------


def test_semigroup_consistent_with_flow(circle_trace):
    tr = circle_trace
    s, t = 0.01, 0.04
    Pf = linearized_semigroup(tr, tr.states[tr.index_of(s)], s, t)
    assert np.abs(Pf - tr.states[tr.index_of(t)]).max() <= 1e-10


def test_semigroup_preserves_constants(circle_trace):
    ones = np.ones(circle_trace.grid.nnodes)
    np.testing.assert_allclose(linearized_semigroup(circle_trace, ones, 0.0, 0.05),
                               ones, atol=1e-12)
    np.testing.assert_allclose(adjoint_semigroup(circle_trace, ones, 0.0, 0.05),
                               ones, atol=1e-12)


def test_semigroup_l2_contraction_and_mass(circle_trace):
    tr = circle_trace
    g = tr.grid
    f = np.sin(3 * g.coords[:, 0]) + 0.2
    Pf = linearized_semigroup(tr, f, 0.0, 0.05)
    assert np.sqrt(Pf**2 @ g.weights) <= np.sqrt(f**2 @ g.weights) + 1e-14
    assert Pf @ g.weights == pytest.approx(f @ g.weights, abs=1e-13)
    Phat = adjoint_semigroup(tr, f, 0.0, 0.05)
    assert np.sqrt(Phat**2 @ g.weights) <= np.sqrt(f**2 @ g.weights) + 1e-14


def test_adjoint_duality(circle_trace):
    tr = circle_trace
    g = tr.grid
    rng = np.random.default_rng(2)
    for _ in range(5):
        f, phi = rng.normal(size=(2, g.nnodes))
        lhs = (phi * linearized_semigroup(tr, f, 0.0, 0.05)) @ g.weights
        rhs = (adjoint_semigroup(tr, phi, 0.0, 0.05) * f) @ g.weights
        assert abs(lhs - rhs) <= 1e-11 * max(1.0, abs(lhs))


def test_jensen_nodewise(circle_trace):
    tr = circle_trace
    rng = np.random.default_rng(3)
    f = rng.normal(size=tr.grid.nnodes)
    Pf = linearized_semigroup(tr, f, 0.0, 0.05)
    Pf2 = linearized_semigroup(tr, f**2, 0.0, 0.05)
    assert (Pf2 - Pf**2).min() >= -1e-10


def test_semigroup_out_of_range(circle_trace):
    f = np.zeros(circle_trace.grid.nnodes)
    with pytest.raises(OutOfRange):
        linearized_semigroup(circle_trace, f, 0.0, 1.0)
    with pytest.raises(OutOfRange):
        linearized_semigroup(circle_trace, f, 0.0123456, 0.02)


# -- 2D flow with anisotropic coefficients -------------------------------------------


def test_2d_randers_torus_flow():
    nf = randers(np.eye(2), [0.3, 0.0], 2, chart=torus([TWO_PI, TWO_PI]))
    g = build_grid(nf, (24, 24))
    x, y = g.coords[:, 0], g.coords[:, 1]
    u0 = np.sin(x) + 0.5 * np.cos(y)
    tr = run_flow(nf, g, u0, 0.02, 1e-3)
    assert np.diff(tr.energies).max() <= 1e-12
    mass = tr.states @ g.weights
    assert np.abs(mass - mass[0]).max() <= 1e-12
    f = np.cos(x + y)
    lhs = (f * linearized_semigroup(tr, u0, 0.0, 0.02)) @ g.weights
    rhs = (adjoint_semigroup(tr, f, 0.0, 0.02) * u0) @ g.weights
    assert abs(lhs - rhs) <= 1e-11


# -- variance -------------------------------------------------------------------------


def test_variance_basics(circle):
    nf, g = circle
    x = g.coords[:, 0]
    assert variance(g, np.full(g.nnodes, 2.0)) == pytest.approx(0.0, abs=1e-15)
    ind = np.where(x < np.pi, 1.0, 0.0)
    assert variance(g, ind) == pytest.approx(0.25, abs=1e-12)
    f = np.sin(x)
    assert variance(g, f + 5.0) == pytest.approx(variance(g, f), abs=1e-12)


def test_2d_x_dependent_randers_flow():
    # exercises the batched coefficient paths with per-row chart points
    from finslerlab import jets
    from finslerlab.norms import dual_norm, dual_norm_batch

    nf = randers(np.eye(2), lambda x: [0.3 * jets.sin(x[1]), 0.0], 2,
                 chart=torus([TWO_PI, TWO_PI]))
    g = build_grid(nf, (20, 20))
    u0 = np.sin(g.coords[:, 0]) + 0.5 * np.cos(g.coords[:, 1])
    tr = run_flow(nf, g, u0, 0.01, 1e-3)
    assert np.diff(tr.energies).max() <= 1e-12
    D = g.node_differential(u0)
    fd = dual_norm_batch(nf, g.coords, D)
    for k in (0, 57, 211):
        assert fd[k] == pytest.approx(dual_norm(nf, list(g.coords[k]), D[k]),
                                      abs=1e-10)


def test_fallback_direction_override():
    # constant state: every face uses the auxiliary field; swapping its
    # direction on an irreversible norm changes the frozen coefficient
    nf = asymmetric_1d(1.0, 2.0, chart=interval(6.0))
    u = np.ones(128)
    g_fwd = build_grid(nf, 128)
    g_bwd = build_grid(nf, 128, fallback_direction=(-1.0,))
    k_fwd = freeze_diffusion(g_fwd, u).kappa[(1,)]
    k_bwd = freeze_diffusion(g_bwd, u).kappa[(1,)]
    np.testing.assert_allclose(k_fwd, 4.0 * k_bwd, rtol=1e-12)


def test_variance_requires_normalized():
    nf = euclidean(1, chart=torus([TWO_PI]))
    g = build_grid(nf, 64, normalize=False)
    with pytest.raises(NotNormalized):
        variance(g, np.ones(64))
