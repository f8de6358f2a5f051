"""Pointwise tensor calculus for analytic scalar fields on a norm field.

Everything here is built from nested forward differentiation of the norm's
``F^2`` closure and the scalar field's closure: connection coefficients,
geodesics, the Legendre gradient, the gradient-referenced Hessian, the
weighted divergence-form Laplacian, the spray curvature trace and its
measure-weighted extension.  All evaluators accept inputs at any jet level
and return scalars at that level, so they compose (e.g. the derivative of
the Laplacian is obtained by calling it on seeded jets).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from finslerlab import jets
from finslerlab.errors import BadN, CriticalPoint, LeftChart, ZeroVector
from finslerlab.jets import max_level, value_of
from finslerlab.norms import (
    Chart,
    NormField,
    ZERO_TOL,
    legendre_scalars,
    mat_inv,
    metric_scalars,
)

GRADIENT_FLOOR = 1e-8  # below this the point is treated as critical

__all__ = [
    "ScalarField",
    "ConnectionData",
    "GeodesicState",
    "connection",
    "spray_scalars",
    "geodesic_shoot",
    "differential",
    "gradient",
    "gradient_scalars",
    "hessian",
    "laplacian",
    "laplacian_scalars",
    "ricci",
    "weighted_ricci",
    "bochner_terms",
    "hs_norm_sq_eigen",
]


@dataclass
class ScalarField:
    """Analytic scalar on a chart, evaluable on (nested) jets."""

    fun: Callable
    chart: Optional[Chart] = None

    def __call__(self, x):
        return self.fun(list(x))


@dataclass
class GeodesicState:
    x: np.ndarray
    v: np.ndarray
    t: float


@dataclass
class ConnectionData:
    """Connection coefficients at one (x, v): formal Christoffel symbols,
    spray, nonlinear connection and the Chern correction of the Christoffels."""

    gamma: np.ndarray      # (n, n, n), index order [i][j][k]
    spray: np.ndarray      # (n,)
    nonlinear: np.ndarray  # (n, n)
    chern: np.ndarray      # (n, n, n)


def _check_nonzero(v):
    vv = np.asarray([value_of(c) for c in v], dtype=float)
    if np.max(np.abs(vv)) < ZERO_TOL:
        raise ZeroVector("connection/curvature requested at v = 0")


# ---------------------------------------------------------------------------
# connection and geodesics
# ---------------------------------------------------------------------------


def _split_jet(e, lvl, n):
    """Value and derivative components of ``e`` with respect to level-``lvl`` seeds.

    Components that never touched those seeds come back as plain constants.
    """
    if isinstance(e, jets.Jet2) and e.level == lvl:
        return e.value, list(e.grad)
    return e, [0.0] * n


def _metric_with_x_derivs(nf, x, v):
    """g, dg/dx and g^{-1} at generic scalars (one x-derivative retained)."""
    base = max_level(x, v)
    X = jets.seed(list(x), level=base + 1)
    V = jets.seed(list(v), level=base + 2)
    F2 = nf.F2(X, V)
    n = nf.n
    g = [[None] * n for _ in range(n)]
    dg = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            val, grad = _split_jet(0.5 * F2.hess[i][j], base + 1, n)
            g[i][j] = val
            dg[i][j] = grad
    return g, dg, mat_inv(g, n)


def _split_jet2(e, lvl, n):
    """Like :func:`_split_jet` but also returning second derivatives."""
    if isinstance(e, jets.Jet2) and e.level == lvl:
        return e.value, list(e.grad), [list(r) for r in e.hess]
    z = [0.0] * n
    return e, list(z), [list(z) for _ in range(n)]


def spray_scalars(nf, x, v, want_gamma=False):
    """Geodesic spray G^i (and optionally the formal Christoffel symbols).

    Generic in the input level; with seeded inputs the output jets carry
    derivatives of the spray.
    """
    n = nf.n
    g, dg, ginv = _metric_with_x_derivs(nf, x, v)
    gamma = [
        [
            [
                0.5
                * sum(
                    ginv[i][l] * (dg[l][k][j] + dg[j][l][k] - dg[j][k][l])
                    for l in range(n)
                )
                for k in range(n)
            ]
            for j in range(n)
        ]
        for i in range(n)
    ]
    G = [
        sum(gamma[i][j][k] * v[j] * v[k] for j in range(n) for k in range(n))
        for i in range(n)
    ]
    if want_gamma:
        return G, gamma
    return G


def connection(nf, x, v):
    """All connection coefficient blocks at a point, as float arrays."""
    _check_nonzero(v)
    n = nf.n
    x = [float(c) for c in x]
    v = [float(c) for c in v]

    G_val, gamma_val = spray_scalars(nf, x, v, want_gamma=True)
    gamma = np.array(
        [[[value_of(gamma_val[i][j][k]) for k in range(n)] for j in range(n)]
         for i in range(n)]
    )
    G = np.array([value_of(c) for c in G_val])

    # nonlinear connection N^i_j = d(G^i)/dv^j / 2 via seeded v
    V = jets.seed(v, level=1)
    Gj = spray_scalars(nf, x, V)
    N = np.zeros((n, n))
    for i in range(n):
        _, gr = _split_jet(Gj[i], 1, n)
        N[i] = [0.5 * value_of(c) for c in gr]

    from finslerlab.norms import cartan_tensor

    A = cartan_tensor(nf, x, v)
    F2v, g_sc = metric_scalars(nf, x, v)
    g = np.array([[value_of(g_sc[i][j]) for j in range(n)] for i in range(n)])
    ginv = np.linalg.inv(g)
    F = math.sqrt(value_of(F2v))
    corr = (
        np.einsum("il,lkm,mj->ijk", ginv, A, N)
        + np.einsum("il,jlm,mk->ijk", ginv, A, N)
        - np.einsum("il,jkm,ml->ijk", ginv, A, N)
    ) / F
    chern = gamma - corr
    return ConnectionData(gamma=gamma, spray=G, nonlinear=N, chern=chern)


def _spray_float(nf, x, v):
    G = spray_scalars(nf, list(x), list(v))
    return np.array([value_of(c) for c in G])


def _rk4_step(nf, x, v, dt):
    def acc(xx, vv):
        return -_spray_float(nf, xx, vv)

    k1x, k1v = v, acc(x, v)
    k2x, k2v = v + 0.5 * dt * k1v, acc(x + 0.5 * dt * k1x, v + 0.5 * dt * k1v)
    k3x, k3v = v + 0.5 * dt * k2v, acc(x + 0.5 * dt * k2x, v + 0.5 * dt * k2v)
    k4x, k4v = v + dt * k3v, acc(x + dt * k3x, v + dt * k3v)
    xn = x + dt * (k1x + 2 * k2x + 2 * k3x + k4x) / 6.0
    vn = v + dt * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
    return xn, vn


def geodesic_shoot(nf, x0, v0, T, dt):
    """Integrate the geodesic equation with a classical 4th-order scheme."""
    _check_nonzero(v0)
    x = np.asarray(x0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    steps = max(1, int(round(abs(T) / abs(dt))))
    h = T / steps
    out = [GeodesicState(x.copy(), v.copy(), 0.0)]
    for k in range(steps):
        x, v = _rk4_step(nf, x, v, h)
        if not nf.chart.contains(x):
            raise LeftChart(f"geodesic exited chart at t = {(k + 1) * h:.6g}, x = {x}")
        out.append(GeodesicState(x.copy(), v.copy(), (k + 1) * h))
    return out


# ---------------------------------------------------------------------------
# gradient, Hessian, Laplacian
# ---------------------------------------------------------------------------


def differential(u: ScalarField, x):
    """Du(x) as scalars at the inputs' level."""
    lvl = max_level(x) + 1
    X = jets.seed(list(x), level=lvl)
    U = u.fun(X)
    return list(U.grad)


def gradient_scalars(nf, u, x):
    """Legendre gradient of u at generic scalars (list of components)."""
    Du = differential(u, x)
    return legendre_scalars(nf, x, Du)


def gradient(nf, u, x):
    """Gradient vector at a point; the zero vector off the smooth locus."""
    return np.array([value_of(c) for c in gradient_scalars(nf, u, list(x))])


def hessian(nf, u, x):
    """Gradient-referenced covariant Hessian as a mixed (1,1) array H[i][j]."""
    n = nf.n
    x = [float(c) for c in x]
    Du = np.array([value_of(c) for c in differential(u, x)])
    if np.max(np.abs(Du)) < GRADIENT_FLOOR:
        raise CriticalPoint(f"Du = {Du} below floor at x = {x}")
    X = jets.seed(x, level=1)
    V = gradient_scalars(nf, u, X)
    grad = np.zeros(n)
    dV = np.zeros((n, n))
    for i in range(n):
        val, gr = _split_jet(V[i], 1, n)
        grad[i] = value_of(val)
        dV[i] = [value_of(c) for c in gr]
    conn = connection(nf, x, list(grad))
    return dV + np.einsum("ijk,k->ij", conn.chern, grad)


def laplacian_scalars(nf, u, x):
    """Divergence-form Laplacian div_m(grad u) at generic scalars."""
    Du = differential(u, x)
    Du_val = np.array([value_of(c) for c in Du], dtype=float)
    if np.max(np.abs(Du_val)) < GRADIENT_FLOOR:
        return 0.0
    lvl = max_level(x) + 1
    X = jets.seed(list(x), level=lvl)
    V = gradient_scalars(nf, u, X)
    Phi = nf.weight(X)
    n = nf.n
    _, dPhi = _split_jet(Phi, lvl, n)
    out = 0.0
    for i in range(n):
        val, gr = _split_jet(V[i], lvl, n)
        out = out + gr[i] + val * dPhi[i]
    return out


def laplacian(nf, u, x):
    return float(value_of(laplacian_scalars(nf, u, [float(c) for c in x])))


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------


def ricci(nf, x, v):
    """Trace of the spray-curvature endomorphism (positively 2-homogeneous)."""
    _check_nonzero(v)
    n = nf.n
    x = [float(c) for c in x]
    v = [float(c) for c in v]
    Z = jets.seed(x + v, level=1)
    G = spray_scalars(nf, Z[:n], Z[n:])
    Gval = np.array([value_of(G[i].value) for i in range(n)])
    Gx = np.array([[value_of(G[i].grad[k]) for k in range(n)] for i in range(n)])
    Gv = np.array(
        [[value_of(G[i].grad[n + k]) for k in range(n)] for i in range(n)]
    )
    Gxv = np.array(
        [
            [[value_of(G[i].hess[j][n + k]) for k in range(n)] for j in range(n)]
            for i in range(n)
        ]
    )
    Gvv = np.array(
        [
            [[value_of(G[i].hess[n + j][n + k]) for k in range(n)] for j in range(n)]
            for i in range(n)
        ]
    )
    vv = np.asarray(v)
    R = (
        Gx
        - 0.5 * np.einsum("j,ijk->ik", vv, Gxv)
        + 0.5 * np.einsum("j,ijk->ik", Gval, Gvv)
        - 0.25 * np.einsum("ij,jk->ik", Gv, Gv)
    )
    return float(np.trace(R))


def _psi_along_geodesic(nf, x, vhat, t, substeps=2):
    """Measure-distortion potential at the geodesic point eta(t)."""
    xx = np.asarray(x, dtype=float).copy()
    vv = np.asarray(vhat, dtype=float).copy()
    if t != 0.0:
        h = t / substeps
        for _ in range(substeps):
            xx, vv = _rk4_step(nf, xx, vv, h)
    _, g = metric_scalars(nf, list(xx), list(vv))
    n = nf.n
    gm = np.array([[value_of(g[i][j]) for j in range(n)] for i in range(n)])
    det = float(np.linalg.det(gm))
    phi = float(value_of(nf.weight(list(xx))))
    return 0.5 * math.log(det) - phi


def weighted_ricci(nf, x, v, Nparam, tstep=1e-3):
    """Curvature trace plus measure-distortion derivatives along the geodesic.

    ``Nparam`` is the effective-dimension parameter: allowed in
    (-inf, 0] or [n, +inf]; ``math.inf`` drops the dimensional correction.
    The potential derivatives use 4th-order central differences in the
    arclength parameter (step ``tstep``), i.e. Richardson-extrapolated
    3-point stencils.
    """
    _check_nonzero(v)
    n = nf.n
    if not math.isinf(Nparam) and 0.0 < Nparam < n:
        raise BadN(f"dimension parameter {Nparam} inside (0, n)")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    F = float(value_of(nf.F(list(x), list(v))))
    vhat = v / F
    tau = tstep
    psi = {
        k: _psi_along_geodesic(nf, x, vhat, k * tau, substeps=2 if abs(k) > 1 else 1)
        for k in (-2, -1, 0, 1, 2)
    }
    dpsi = (8 * (psi[1] - psi[-1]) - (psi[2] - psi[-2])) / (12 * tau)
    d2psi = (
        16 * (psi[1] + psi[-1]) - (psi[2] + psi[-2]) - 30 * psi[0]
    ) / (12 * tau * tau)
    out = ricci(nf, x, vhat) + d2psi
    if not math.isinf(Nparam):
        if Nparam == n:
            out = out - (math.inf if abs(dpsi) > 1e-12 else 0.0)
        else:
            out = out - dpsi * dpsi / (Nparam - n)
    return out * F * F


# ---------------------------------------------------------------------------
# pointwise curvature-identity terms
# ---------------------------------------------------------------------------


def hs_norm_sq_eigen(H, g):
    """Hilbert-Schmidt norm of a g-symmetric operator via its eigenvalues."""
    L = np.linalg.cholesky(g)
    sym = L.T @ H @ np.linalg.inv(L.T)
    ev = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    return float(np.sum(ev**2))


def bochner_terms(nf, u, x, tstep=1e-3):
    """Every pointwise quantity entering the curvature identities at x in M_u.

    Returns a dict with the squared gradient norm, nonlinear Laplacian, its
    derivative paired with the gradient, the linearized Laplacian of the
    half-squared gradient norm, the Hessian and both Hilbert-Schmidt norms,
    the measure-weighted curvature, and the quadratic forms of dF(grad u)
    and dF^2(grad u) used by the sharpened inequality.
    """
    n = nf.n
    x = [float(c) for c in x]
    Du = np.array([value_of(c) for c in differential(u, x)], dtype=float)
    if np.max(np.abs(Du)) < GRADIENT_FLOOR:
        raise CriticalPoint(f"x = {x} is not in M_u")

    X = jets.seed(x, level=1)
    V = gradient_scalars(nf, u, X)
    grad = np.array([value_of(_split_jet(c, 1, n)[0]) for c in V])

    w2 = nf.F2(X, V)  # F^2(grad u) as a jet in x
    _, g_j = metric_scalars(nf, X, V)
    A_j = mat_inv(g_j, n)
    Phi = nf.weight(X)

    Aval = np.zeros((n, n))
    dA = np.zeros((n, n, n))
    gval = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            av, ag = _split_jet(A_j[i][j], 1, n)
            Aval[i, j] = value_of(av)
            dA[i, j] = [value_of(c) for c in ag]
            gval[i, j] = value_of(_split_jet(g_j[i][j], 1, n)[0])
    w2v, w2g, w2h = _split_jet2(w2, 1, n)
    F2val = float(value_of(w2v))
    w2_grad = np.array([value_of(c) for c in w2g])
    w2_hess = np.array([[value_of(w2h[i][j]) for j in range(n)] for i in range(n)])
    _, phig = _split_jet(Phi, 1, n)
    dPhi = np.array([value_of(c) for c in phig])

    # linearized Laplacian of F^2(grad u)/2 with coefficient field g*(Du(x))
    lin_lap = 0.5 * (
        np.einsum("iji,j->", dA, w2_grad)  # d_i(A^{ij}) d_j w
        + np.einsum("ij,ij->", Aval, w2_hess)
        + np.einsum("i,ij,j->", dPhi, Aval, w2_grad)
    )

    # nonlinear Laplacian and its x-derivative paired with the gradient
    lap_j = laplacian_scalars(nf, u, X)
    lapv, lapg = _split_jet(lap_j, 1, n)
    lap = float(value_of(lapv))
    dlap = np.array([value_of(c) for c in lapg])
    d_lap_grad = float(dlap @ grad)

    # covariant Hessian and Hilbert-Schmidt norms
    dV = np.array(
        [[value_of(_split_jet(V[i], 1, n)[1][j]) for j in range(n)] for i in range(n)]
    )
    conn = connection(nf, x, list(grad))
    H = dV + np.einsum("ijk,k->ij", conn.chern, grad)
    hs_direct = float(np.einsum("ik,ij,kl,jl->", gval, H, H, Aval))

    Fgrad = np.array([0.5 * w2_grad[i] / math.sqrt(F2val) for i in range(n)])
    dF_quad = float(Fgrad @ Aval @ Fgrad)
    dF2_quad = float(w2_grad @ Aval @ w2_grad)

    return {
        "x": np.array(x),
        "grad": grad,
        "F2": F2val,
        "lap": lap,
        "d_lap_grad": d_lap_grad,
        "lin_lap_F2_half": float(lin_lap),
        "hessian": H,
        "metric": gval,
        "hs_sq": hs_direct,
        "hs_sq_eigen": hs_norm_sq_eigen(H, gval),
        "ric_inf": weighted_ricci(nf, x, grad, math.inf, tstep=tstep),
        "dF_quad": dF_quad,
        "dF2_quad": dF2_quad,
    }
