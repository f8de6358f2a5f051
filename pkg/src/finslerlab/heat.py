"""Nonlinear heat flow on weighted 1D/2D grids, with its linearization.

The spatial operator is assembled in divergence form from per-link
coefficients, so the discrete summation-by-parts identity
``sum_i phi_i (L f)_i w_i = -a(phi, f)`` is exact by construction.  One flow
step freezes the dual-metric coefficients at the current state and solves
the semi-implicit system ``(W + dt K) u+ = W u0`` by conjugate gradients;
the linearized semigroup and its adjoint reuse exactly these step solves
(the steps are self-adjoint in the weighted inner product, so the adjoint
is the same solve sequence in reversed order).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from finslerlab.errors import NotNormalized, OutOfRange, SolverDiverged
from finslerlab.norms import NormField, dual_metric_batch, dual_norm_batch, legendre

FALLBACK_TOL = 1e-10  # |Du| below this uses the auxiliary direction

__all__ = [
    "Grid",
    "FrozenDiffusion",
    "FlowTrace",
    "build_grid",
    "dirichlet_energy",
    "heat_step",
    "run_flow",
    "linearized_semigroup",
    "adjoint_semigroup",
    "variance",
]


@dataclass
class Grid:
    """Structured periodic or zero-flux grid with weighted quadrature."""

    nf: NormField
    shape: tuple
    spacing: tuple
    periodic: tuple
    coords: np.ndarray          # (N, n) node coordinates
    weights: np.ndarray         # (N,) quadrature weights e^{Phi} h^n (maybe normalized)
    normalized: bool
    links: dict = field(default_factory=dict)   # family -> (i_idx, j_idx, offset)
    fallback_direction: Optional[tuple] = None  # auxiliary field where Du = 0
    _fallback_alpha: Optional[np.ndarray] = None

    @property
    def n(self):
        return len(self.shape)

    @property
    def nnodes(self):
        return int(np.prod(self.shape))

    @property
    def h(self):
        return float(self.spacing[0])

    def node_index(self):
        return np.arange(self.nnodes).reshape(self.shape)

    def sample(self, fun):
        """Evaluate a scalar closure at the nodes."""
        vals = fun([self.coords[:, i] for i in range(self.n)])
        return np.asarray(vals, dtype=float) * np.ones(self.nnodes)

    def node_differential(self, u):
        """Node-centered derivative of a grid function, (N, n)."""
        U = np.asarray(u, dtype=float).reshape(self.shape)
        out = np.empty(self.shape + (self.n,))
        for a in range(self.n):
            if self.periodic[a]:
                out[..., a] = (np.roll(U, -1, axis=a) - np.roll(U, 1, axis=a)) / (
                    2 * self.spacing[a]
                )
            else:
                out[..., a] = np.gradient(U, self.spacing[a], axis=a, edge_order=2)
        return out.reshape(self.nnodes, self.n)

    def interior_mask(self, margin):
        """Nodes at least ``margin`` away from any zero-flux boundary."""
        mask = np.ones(self.shape, dtype=bool)
        X = self.coords.reshape(self.shape + (self.n,))
        for a in range(self.n):
            if not self.periodic[a]:
                L = self.nf.chart.halfwidths[a]
                mask &= np.abs(X[..., a]) <= L - margin
        return mask.ravel()

    def fallback_alpha(self):
        """Covector of the auxiliary unit field used where Du vanishes.

        The choice is a frozen convention (first coordinate direction unless
        overridden); transported quantities off the smooth locus depend on it,
        so sensitivity runs may swap it via ``fallback_direction``.
        """
        if self._fallback_alpha is None:
            n = self.n
            if self.fallback_direction is not None:
                e1 = np.asarray(self.fallback_direction, dtype=float)
            else:
                e1 = np.zeros(n)
                e1[0] = 1.0
            x0 = [0.0] * n
            F = float(self.nf.F(x0, list(e1)))
            vfb = e1 / F
            from finslerlab.norms import legendre_primal

            self._fallback_alpha = legendre_primal(self.nf, x0, list(vfb))
        return self._fallback_alpha


def build_grid(nf, nodes_per_axis, normalize=True, fallback_direction=None):
    """Grid over ``nf``'s chart: torus axes are periodic, interval axes zero-flux."""
    chart = nf.chart
    if np.isscalar(nodes_per_axis):
        nodes_per_axis = (int(nodes_per_axis),) * chart.n
    shape = tuple(int(m) for m in nodes_per_axis)
    axes, spacing, periodic = [], [], []
    for a in range(chart.n):
        m = shape[a]
        if chart.kind == "torus":
            L = chart.periods[a]
            axes.append(np.arange(m) * (L / m))
            spacing.append(L / m)
            periodic.append(True)
        elif chart.kind == "interval":
            L = chart.halfwidths[a]
            h = 2 * L / m
            axes.append(-L + (np.arange(m) + 0.5) * h)
            spacing.append(h)
            periodic.append(False)
        else:
            raise ValueError("grids require a torus or interval chart")
    grids = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=-1)
    phi = nf.weight([coords[:, i] for i in range(chart.n)])
    w = np.exp(np.asarray(phi, dtype=float) * np.ones(len(coords)))
    w = w * np.prod(spacing)
    if normalize:
        w = w / w.sum()
    g = Grid(nf, shape, tuple(spacing), tuple(periodic), coords, w, normalize,
             fallback_direction=(tuple(fallback_direction)
                                 if fallback_direction is not None else None))
    _build_links(g)
    return g


def _build_links(g):
    idx = g.node_index()
    n = g.n
    fams = [np.eye(n, dtype=int)[a] for a in range(n)]
    if n == 2:
        fams += [np.array([1, 1]), np.array([1, -1])]
    for off in fams:
        j = idx
        valid = np.ones(g.shape, dtype=bool)
        for a in range(n):
            if off[a] == 0:
                continue
            j = np.roll(j, -off[a], axis=a)
            if not g.periodic[a]:
                sl = [slice(None)] * n
                sl[a] = slice(-1, None) if off[a] > 0 else slice(0, 1)
                valid[tuple(sl)] = False
        key = tuple(int(c) for c in off)
        g.links[key] = (idx[valid].ravel(), j[valid].ravel(), off.copy())


@dataclass
class FrozenDiffusion:
    """Per-link nonnegative coefficients of the frozen dual metric."""

    kappa: dict  # family offset -> per-link coefficient array (kappa_link)


@dataclass
class FlowTrace:
    """Record of a nonlinear heat run: states, energies and frozen steps."""

    grid: Grid
    dt: float
    times: np.ndarray
    states: np.ndarray            # (steps+1, N)
    energies: np.ndarray
    frozen: list                  # FrozenDiffusion per step

    def index_of(self, t):
        k = int(round(t / self.dt))
        if k < 0 or k >= len(self.times) or abs(self.times[k] - t) > 1e-9 * max(
            1.0, abs(t)
        ):
            raise OutOfRange(f"time {t} is not a step time of the trace")
        return k


# ---------------------------------------------------------------------------
# frozen coefficients and stiffness assembly
# ---------------------------------------------------------------------------


def _dual_coeff_nodes(g, u):
    """g*(Du) at the nodes, with the auxiliary direction where Du vanishes."""
    nf = g.nf
    D = g.node_differential(u)
    flat = np.max(np.abs(D), axis=1) < FALLBACK_TOL
    A = D.copy()
    A[flat] = g.fallback_alpha()
    return dual_metric_batch(nf, g.coords, A)


def _face_midpoints(g, key):
    i_idx, j_idx, off = g.links[key]
    step = np.asarray(off, dtype=float) * np.asarray(g.spacing)
    return g.coords[i_idx] + 0.5 * step[None, :]


def freeze_diffusion(g, u):
    """Per-link coefficients kappa = c_dir * mean link weight.

    In one dimension the dual metric is evaluated at exact face differences;
    in two dimensions node coefficients are decomposed over the lattice
    directions (axis plus one diagonal, picked by the sign of the
    off-diagonal entry) and averaged onto links.
    """
    nf = g.nf
    kap = {}
    if g.n == 1:
        key = (1,)
        i_idx, j_idx, _ = g.links[key]
        h = g.spacing[0]
        du = (u[j_idx] - u[i_idx]) / h
        Aface = du[:, None].copy()
        Aface[np.abs(du) < FALLBACK_TOL] = g.fallback_alpha()
        gstar = dual_metric_batch(nf, _face_midpoints(g, key), Aface)[:, 0, 0]
        mbar = 0.5 * (g.weights[i_idx] + g.weights[j_idx])
        kap[key] = gstar * mbar / h**2
        return FrozenDiffusion(kap)

    if abs(g.spacing[0] - g.spacing[1]) > 1e-12 * g.spacing[0]:
        raise ValueError("2D diffusion requires equal spacings for the "
                         "lattice-direction decomposition")
    h2 = g.spacing[0] ** 2
    A = _dual_coeff_nodes(g, u)
    a11, a22, a12 = A[:, 0, 0], A[:, 1, 1], A[:, 0, 1]
    cmag = np.abs(a12)
    bad = cmag - np.minimum(a11, a22)
    if np.any(bad > 1e-10 * np.maximum(a11, a22)):
        raise SolverDiverged(
            "dual metric too anisotropic for a nonnegative lattice stencil"
        )
    cmag = np.minimum(cmag, np.minimum(a11, a22))
    c = {
        (1, 0): (a11 - cmag) / h2,
        (0, 1): (a22 - cmag) / h2,
        (1, 1): np.where(a12 >= 0, cmag, 0.0) / h2,
        (1, -1): np.where(a12 < 0, cmag, 0.0) / h2,
    }
    for key, cn in c.items():
        i_idx, j_idx, _ = g.links[key]
        cbar = 0.5 * (cn[i_idx] + cn[j_idx])
        mbar = 0.5 * (g.weights[i_idx] + g.weights[j_idx])
        kap[key] = cbar * mbar
    return FrozenDiffusion(kap)


def assemble_stiffness(g, frozen):
    """Sparse K with f^T K f = sum_links kappa (f_j - f_i)^2 (so K 1 = 0)."""
    N = g.nnodes
    rows, cols, vals = [], [], []
    for key, kappa in frozen.kappa.items():
        i_idx, j_idx, _ = g.links[key]
        rows += [i_idx, j_idx, i_idx, j_idx]
        cols += [i_idx, j_idx, j_idx, i_idx]
        vals += [kappa, kappa, -kappa, -kappa]
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(N, N))


# ---------------------------------------------------------------------------
# energy, steps, flow
# ---------------------------------------------------------------------------


def dirichlet_energy(nf, g, u):
    """Face-quadrature Dirichlet energy: one half the dual norm squared of Du."""
    u = np.asarray(u, dtype=float)
    total = 0.0
    axis_keys = [key for key in g.links if sum(abs(k) for k in key) == 1]
    for key in axis_keys:
        i_idx, j_idx, off = g.links[key]
        axis = int(np.nonzero(off)[0][0])
        h = g.spacing[axis]
        Dnode = g.node_differential(u)
        Du = 0.5 * (Dnode[i_idx] + Dnode[j_idx])
        Du[:, axis] = (u[j_idx] - u[i_idx]) / h
        mbar = 0.5 * (g.weights[i_idx] + g.weights[j_idx])
        fs = dual_norm_batch(nf, _face_midpoints(g, key), Du)
        total += 0.5 * float(np.sum(fs**2 * mbar))
    return total / len(axis_keys)


def _step_solve(g, frozen, dt, b_state, rtol=1e-13):
    """Solve (W + dt K) u = W b and project the mass defect out."""
    K = assemble_stiffness(g, frozen)
    W = g.weights
    A = sp.diags(W) + dt * K
    b = W * b_state
    M = LinearOperator(A.shape, matvec=lambda z: z / A.diagonal())
    u, info = cg(A, b, x0=b_state, rtol=rtol, atol=0.0, M=M,
                 maxiter=10 * g.nnodes)
    if info != 0:
        raise SolverDiverged(f"conjugate gradient returned info = {info}")
    u = u + (W @ b_state - W @ u) / W.sum()
    return u


def heat_step(nf, g, u, dt):
    """One semi-implicit step of the nonlinear flow."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    frozen = freeze_diffusion(g, np.asarray(u, dtype=float))
    return _step_solve(g, frozen, dt, np.asarray(u, dtype=float))


def run_flow(nf, g, u0, T, dt):
    """Iterate heat steps, recording states, energies and frozen diffusions."""
    steps = max(1, int(round(T / dt)))
    u = np.asarray(u0, dtype=float).copy()
    states = np.empty((steps + 1, g.nnodes))
    energies = np.empty(steps + 1)
    states[0] = u
    energies[0] = dirichlet_energy(nf, g, u)
    frozen_all = []
    for k in range(steps):
        frozen = freeze_diffusion(g, u)
        frozen_all.append(frozen)
        u = _step_solve(g, frozen, dt, u)
        states[k + 1] = u
        energies[k + 1] = dirichlet_energy(nf, g, u)
    times = np.arange(steps + 1) * dt
    return FlowTrace(g, dt, times, states, energies, frozen_all)


# ---------------------------------------------------------------------------
# linearized semigroup and adjoint
# ---------------------------------------------------------------------------


def linearized_semigroup(trace, f, s, t):
    """Evolve f by the frozen step operators of the trace from time s to t."""
    ks, kt = trace.index_of(s), trace.index_of(t)
    if ks > kt:
        raise OutOfRange(f"require s <= t, got {s} > {t}")
    out = np.asarray(f, dtype=float).copy()
    for k in range(ks, kt):
        out = _step_solve(trace.grid, trace.frozen[k], trace.dt, out)
    return out


def adjoint_semigroup(trace, phi, s, t):
    """Weighted-inner-product adjoint: the same self-adjoint steps, reversed."""
    ks, kt = trace.index_of(s), trace.index_of(t)
    if ks > kt:
        raise OutOfRange(f"require s <= t, got {s} > {t}")
    out = np.asarray(phi, dtype=float).copy()
    for k in range(kt - 1, ks - 1, -1):
        out = _step_solve(trace.grid, trace.frozen[k], trace.dt, out)
    return out


def variance(g, f):
    """Variance of a grid function under the (normalized) node weights."""
    w = g.weights
    if abs(w.sum() - 1.0) > 1e-12:
        raise NotNormalized("variance requires normalized weights")
    f = np.asarray(f, dtype=float)
    mean = float(w @ f)
    return float(w @ (f - mean) ** 2)
