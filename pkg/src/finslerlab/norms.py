"""Anisotropic norm fields on flat charts: metric tensors, duals, constants.

A :class:`NormField` packages an analytic norm ``F(x, v)`` (positively
1-homogeneous and strongly convex in ``v``), a chart describing the domain,
and a measure weight ``Phi`` with ``dm = e^{Phi} dx``.  The norm is stored
as a closure for ``F^2`` that accepts floats, numpy arrays (batched) or
jets, so every derived object (fundamental tensor, Cartan tensor, Legendre
transform, dual norm) is obtained by forward differentiation of the same
expression.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from finslerlab import jets
from finslerlab.errors import NoConvergence, NotConvex, ZeroVector
from finslerlab.jets import Jet2, level_of, value_of

ZERO_TOL = 1e-14

__all__ = [
    "Chart",
    "NormField",
    "plane",
    "torus",
    "interval",
    "euclidean",
    "riemannian",
    "randers",
    "smoothed_pnorm",
    "asymmetric_1d",
    "custom",
    "reverse",
    "metric_tensor",
    "metric_scalars",
    "metric_batch",
    "cartan_tensor",
    "legendre",
    "legendre_primal",
    "legendre_batch",
    "legendre_scalars",
    "dual_norm",
    "dual_norm_batch",
    "dual_metric",
    "dual_metric_batch",
    "smoothness_constants",
    "SmoothnessConstants",
    "mat_inv",
]


@dataclass(frozen=True)
class Chart:
    """Flat coordinate domain: full plane, torus, or zero-flux box."""

    kind: str  # "plane" | "torus" | "interval"
    n: int
    periods: Optional[tuple] = None      # torus periods per axis
    halfwidths: Optional[tuple] = None   # interval/rectangle half-widths
    sample_box: float = 3.0              # sampling half-width for plane charts

    def sample_points(self, per_axis):
        """Deterministic interior grid used for sups and validity scans."""
        axes = []
        for i in range(self.n):
            if self.kind == "torus":
                L = self.periods[i]
                axes.append((np.arange(per_axis) + 0.5) * (L / per_axis))
            elif self.kind == "interval":
                L = self.halfwidths[i]
                axes.append(np.linspace(-L, L, per_axis + 2)[1:-1])
            else:
                L = self.sample_box
                axes.append(np.linspace(-L, L, per_axis))
        grids = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def contains(self, x):
        if self.kind != "interval":
            return True
        return all(abs(x[i]) <= self.halfwidths[i] for i in range(self.n))


def plane(n, sample_box=3.0):
    return Chart("plane", n, sample_box=sample_box)


def torus(periods):
    periods = tuple(float(p) for p in periods)
    return Chart("torus", len(periods), periods=periods)


def interval(halfwidths):
    if np.isscalar(halfwidths):
        halfwidths = (float(halfwidths),)
    else:
        halfwidths = tuple(float(h) for h in halfwidths)
    return Chart("interval", len(halfwidths), halfwidths=halfwidths)


@dataclass
class NormField:
    """Analytic Minkowski-norm field with a measure weight.

    ``F2fun(x, v)`` evaluates ``F^2`` for nonzero ``v``; components of ``x``
    and ``v`` may be floats, arrays or jets.  ``weight(x)`` is the potential
    ``Phi`` of the measure ``e^{Phi} dx``.  ``special`` holds optional
    closed-form fast paths (keys: ``legendre_batch``, ``dual_metric_batch``,
    ``dual_norm_batch``) used by grid solvers when present.
    """

    n: int
    family: str
    chart: Chart
    F2fun: Callable
    weight: Callable = None
    x_dependent: bool = False
    params: dict = field(default_factory=dict)
    special: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.weight is None:
            self.weight = lambda x: 0.0

    def F2(self, x, v):
        return self.F2fun(list(x), list(v))

    def F(self, x, v):
        """Norm value; exact 0 at the zero section."""
        vv = [value_of(c) for c in v]
        if all(not isinstance(c, np.ndarray) for c in vv):
            if max(abs(c) for c in vv) < ZERO_TOL:
                return 0.0
        return jets.sqrt(self.F2(x, v))

    def F_batch(self, x, V):
        """Norm on rows of ``V`` (shape (B, n)); rows must be nonzero."""
        comps = [np.asarray(V)[:, i] for i in range(self.n)]
        return np.sqrt(np.asarray(self.F2(_xcomps(x, self.n), comps), dtype=float))

    def density(self, x):
        """Measure density e^{Phi} at a point (generic in the input kind)."""
        return jets.exp(self.weight(list(x)))


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------


def _as_matrix_fun(a, n):
    if callable(a):
        return a, True
    a = np.asarray(a, dtype=float)

    def const(_x, _a=a):
        return [[_a[i, j] for j in range(n)] for i in range(n)]

    return const, False


def _as_vector_fun(b, n):
    if callable(b):
        return b, True
    b = np.asarray(b, dtype=float)

    def const(_x, _b=b):
        return [_b[i] for i in range(n)]

    return const, False


def euclidean(n, chart=None, weight=None):
    chart = chart or plane(n)

    def F2(x, v):
        s = v[0] * v[0]
        for c in v[1:]:
            s = s + c * c
        return s

    nf = NormField(n, "euclidean", chart, F2, weight, x_dependent=False)
    nf.special["legendre_batch"] = lambda x, A: np.asarray(A, dtype=float).copy()
    nf.special["dual_metric_batch"] = lambda x, A: np.broadcast_to(
        np.eye(n), (np.asarray(A).shape[0], n, n)
    ).copy()
    return nf


def riemannian(a, n, chart=None, weight=None):
    """F(v) = sqrt(v^T a(x) v) with a symmetric positive-definite."""
    chart = chart or plane(n)
    afun, xdep = _as_matrix_fun(a, n)

    def F2(x, v):
        A = afun(x)
        s = 0.0
        for i in range(n):
            for j in range(n):
                s = s + A[i][j] * v[i] * v[j]
        return s

    nf = NormField(n, "riemannian", chart, F2, weight, x_dependent=xdep,
                   params={"a": a})
    if not xdep:
        ainv = np.linalg.inv(np.asarray(a, dtype=float))
        nf.special["legendre_batch"] = lambda x, A_, M=ainv: np.asarray(A_) @ M.T
        nf.special["dual_metric_batch"] = lambda x, A_, M=ainv: np.broadcast_to(
            M, (np.asarray(A_).shape[0], n, n)
        ).copy()
    return nf


def randers(a, b, n, chart=None, weight=None, validate=True):
    """F(v) = sqrt(v^T a(x) v) + b(x)·v, requiring |b|_{a^{-1}} < 1."""
    chart = chart or plane(n)
    afun, xdep_a = _as_matrix_fun(a, n)
    bfun, xdep_b = _as_vector_fun(b, n)
    xdep = xdep_a or xdep_b

    def F2(x, v):
        A = afun(x)
        B = bfun(x)
        q = 0.0
        for i in range(n):
            for j in range(n):
                q = q + A[i][j] * v[i] * v[j]
        lin = 0.0
        for i in range(n):
            lin = lin + B[i] * v[i]
        root = jets.sqrt(q)
        return (root + lin) ** 2

    nf = NormField(n, "randers", chart, F2, weight, x_dependent=xdep,
                   params={"a": a, "b": b})
    if validate:
        pts = chart.sample_points(8 if xdep else 1)
        for x in pts:
            A = np.array([[value_of(c) for c in row] for row in afun(list(x))])
            B = np.array([value_of(c) for c in bfun(list(x))])
            bn = float(np.sqrt(B @ np.linalg.solve(A, B)))
            if bn >= 1.0 - 1e-10:
                raise NotConvex(
                    f"randers drift |b|_a = {bn:.6f} >= 1 at x = {x}"
                )
    return nf


def smoothed_pnorm(p, eps_smooth, n, chart=None, weight=None):
    """Strongly convex regularization of the p-norm.

    F^p(v) = sum_i (v_i^2)^{p/2} + (eps^2 |v|_2^2)^{p/2}; the isotropic term
    restores a positive-definite vertical Hessian on the axes.
    """
    chart = chart or plane(n)
    p = float(p)
    e2 = float(eps_smooth) ** 2

    def F2(x, v):
        q = v[0] * v[0]
        for c in v[1:]:
            q = q + c * c
        s = (e2 * q) ** (p / 2.0)
        for c in v:
            s = s + (c * c) ** (p / 2.0)
        return s ** (2.0 / p)

    return NormField(n, "smoothed-pnorm", chart, F2, weight,
                     x_dependent=False,
                     params={"p": p, "eps_smooth": float(eps_smooth)})


def asymmetric_1d(f_plus, f_minus, chart=None, weight=None):
    """One-dimensional ray-wise linear norm: F(v) = f+ v (v>0), f- |v| (v<0)."""
    chart = chart or plane(1)
    fp, fm = float(f_plus), float(f_minus)

    def F2(x, v):
        s = jets.where_sign(v[0], fp, fm)
        return (s * v[0]) ** 2

    nf = NormField(1, "asymmetric-1d", chart, F2, weight, x_dependent=False,
                   params={"f_plus": fp, "f_minus": fm})

    def leg(x, A):
        A = np.asarray(A, dtype=float)
        g = np.where(A[:, 0] >= 0.0, fp * fp, fm * fm)
        return (A[:, 0] / g)[:, None]

    def gstar(x, A):
        A = np.asarray(A, dtype=float)
        g = np.where(A[:, 0] >= 0.0, fp * fp, fm * fm)
        return (1.0 / g)[:, None, None]

    def fstar(x, A):
        A = np.asarray(A, dtype=float)
        return np.where(A[:, 0] >= 0.0, A[:, 0] / fp, -A[:, 0] / fm)

    nf.special["legendre_batch"] = leg
    nf.special["dual_metric_batch"] = gstar
    nf.special["dual_norm_batch"] = fstar
    return nf


def custom(F2fun, n, chart=None, weight=None, x_dependent=True, params=None):
    chart = chart or plane(n)
    return NormField(n, "custom-analytic", chart, F2fun, weight,
                     x_dependent=x_dependent, params=params or {})


def reverse(nf: NormField) -> NormField:
    """Reverse structure: F_rev(v) = F(-v), same chart and measure."""

    def F2rev(x, v):
        return nf.F2fun(x, [-c for c in v])

    rev = NormField(nf.n, f"reverse:{nf.family}", nf.chart, F2rev, nf.weight,
                    x_dependent=nf.x_dependent,
                    params={"reversed_of": nf.family, **nf.params})
    if "legendre_batch" in nf.special:
        rev.special["legendre_batch"] = lambda x, A: -nf.special["legendre_batch"](
            x, -np.asarray(A, dtype=float)
        )
    if "dual_metric_batch" in nf.special:
        rev.special["dual_metric_batch"] = lambda x, A: nf.special[
            "dual_metric_batch"
        ](x, -np.asarray(A, dtype=float))
    if "dual_norm_batch" in nf.special:
        rev.special["dual_norm_batch"] = lambda x, A: nf.special[
            "dual_norm_batch"
        ](x, -np.asarray(A, dtype=float))
    return rev


# ---------------------------------------------------------------------------
# fundamental and Cartan tensors
# ---------------------------------------------------------------------------


def _check_nonzero(v):
    vv = np.asarray([value_of(c) for c in v], dtype=float)
    if np.max(np.abs(vv)) < ZERO_TOL:
        raise ZeroVector("direction-dependent quantity at v = 0")


def _xcomps(x, n):
    """Chart-point input as a component list (accepts (B, n) stacks)."""
    if isinstance(x, np.ndarray) and x.ndim == 2:
        return [x[:, i] for i in range(n)]
    return list(x)


def _xselect(xc, idx, batch):
    """Row-select per-component arrays that are batched over ``batch`` rows."""
    out = []
    for c in xc:
        if isinstance(c, np.ndarray) and c.ndim == 1 and len(c) == batch:
            out.append(c[idx])
        else:
            out.append(c)
    return out


def _input_level(*seqs):
    lv = 0
    for s in seqs:
        for c in s:
            lv = max(lv, level_of(c))
    return lv


def metric_scalars(nf, x, v):
    """(F2, g) at generic scalars; g entries live at the inputs' level."""
    lvl = _input_level(x, v) + 1
    V = jets.seed(list(v), level=lvl)
    F2 = nf.F2(x, V)
    n = nf.n
    g = [[0.5 * F2.hess[i][j] for j in range(n)] for i in range(n)]
    return F2.value, g


def metric_tensor(nf, x, v):
    """Fundamental tensor (vertical Hessian of F^2/2) as an (n, n) array."""
    _check_nonzero(v)
    _, g = metric_scalars(nf, list(x), list(v))
    G = np.array([[value_of(g[i][j]) for j in range(nf.n)] for i in range(nf.n)])
    ev = np.linalg.eigvalsh(0.5 * (G + G.T))
    if ev.min() <= 0.0:
        raise NotConvex(f"fundamental tensor not positive-definite: eig {ev}")
    return G


def metric_batch(nf, x, Vmat):
    """Fundamental tensors for each row of ``Vmat``: returns (B, n, n)."""
    n = nf.n
    Vmat = np.asarray(Vmat, dtype=float)
    comps = [Vmat[:, i] for i in range(n)]
    x = _xcomps(x, n)
    lvl = _input_level(x) + 1
    V = jets.seed(comps, level=lvl)
    F2 = nf.F2(x, V)
    B = Vmat.shape[0]
    out = np.empty((B, n, n))
    for i in range(n):
        for j in range(n):
            out[:, i, j] = 0.5 * np.asarray(F2.hess[i][j], dtype=float)
    return out


def cartan_tensor(nf, x, v):
    """Totally symmetric vertical derivative of g, scaled by F/2."""
    _check_nonzero(v)
    n = nf.n
    x = list(x)
    base = _input_level(x, v)
    inner = jets.seed(list(v), level=base + 1)
    outer = jets.seed(inner, level=base + 2)
    F2 = nf.F2(x, outer)
    Fval = np.sqrt(value_of(F2.value))
    A = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            dg = F2.hess[i][j]  # inner jet: 0.5*dg is g_ij as a function of v
            for k in range(n):
                A[i, j, k] = 0.25 * Fval * value_of(dg.grad[k])
    return A


# ---------------------------------------------------------------------------
# Legendre transform and duals
# ---------------------------------------------------------------------------


def mat_inv(g, n):
    """Inverse of a small symmetric matrix of generic scalars (n <= 3)."""
    if n == 1:
        return [[1.0 / g[0][0]]]
    if n == 2:
        a, b, c = g[0][0], g[0][1], g[1][1]
        det = a * c - b * b
        return [[c / det, -b / det], [-b / det, a / det]]
    if n == 3:
        a, b, c = g[0][0], g[0][1], g[0][2]
        d, e, f = g[1][1], g[1][2], g[2][2]
        A = d * f - e * e
        B = c * e - b * f
        C = b * e - c * d
        det = a * A + b * B + c * C
        D = a * f - c * c
        E = b * c - a * e
        F_ = a * d - b * b
        return [
            [A / det, B / det, C / det],
            [B / det, D / det, E / det],
            [C / det, E / det, F_ / det],
        ]
    raise NotImplementedError("mat_inv supports n <= 3")


def legendre_primal(nf, x, v):
    """L(v): the covector g_v(v, ·), i.e. one half the vertical gradient of F^2."""
    _check_nonzero(v)
    _, g = metric_scalars(nf, list(x), list(v))
    n = nf.n
    return np.array(
        [value_of(sum(g[j][k] * value_of(v[k]) for k in range(n))) for j in range(n)]
    )


def _objective_batch(nf, x, V, A):
    n = nf.n
    comps = [V[:, i] for i in range(n)]
    F2 = np.asarray(nf.F2(x, comps), dtype=float)
    return 0.5 * F2 - np.einsum("bi,bi->b", A, V)


def legendre_batch(nf, x, A, tol=1e-12, max_iter=50):
    """Row-wise Legendre transform by damped Newton on v -> F^2(v)/2 - a(v).

    ``x`` is a fixed chart point (floats) or per-row arrays; ``A`` has shape
    (B, n).  The Newton matrix is the fundamental tensor itself, which makes
    each iteration a batched SPD solve.
    """
    if "legendre_batch" in nf.special:
        return nf.special["legendre_batch"](x, A)
    A = np.asarray(A, dtype=float)
    B, n = A.shape
    out = np.zeros_like(A)
    live = np.max(np.abs(A), axis=1) >= ZERO_TOL
    if not live.any():
        return out
    idx = np.where(live)[0]
    Al = A[idx]
    xl = _xselect(_xcomps(x, n), idx, B)
    V = Al.copy()
    scale = np.maximum(1.0, np.max(np.abs(Al), axis=1))
    h = _objective_batch(nf, xl, V, Al)
    for _ in range(max_iter):
        g = metric_batch(nf, xl, V)
        L = np.einsum("bjk,bk->bj", g, V)
        r = L - Al
        err = np.max(np.abs(r), axis=1)
        if np.all(err <= tol * scale):
            break
        delta = np.linalg.solve(g, -r[..., None])[..., 0]
        s = np.ones(len(idx))
        for _ in range(40):
            Vt = V + s[:, None] * delta
            ht = _objective_batch(nf, xl, Vt, Al)
            bad = ht > h + 1e-14 * np.abs(h)
            if not bad.any():
                break
            s[bad] *= 0.5
        V = V + s[:, None] * delta
        h = _objective_batch(nf, xl, V, Al)
    else:
        raise NoConvergence(
            f"legendre Newton stalled; worst residual {float(np.max(err)):.3e}"
        )
    out[idx] = V
    return out


def legendre(nf, x, alpha, tol=1e-12, max_iter=50):
    """Legendre transform of a single covector (floats in, floats out)."""
    alpha = np.asarray(alpha, dtype=float)
    if np.max(np.abs(alpha)) < ZERO_TOL:
        return np.zeros(nf.n)
    return legendre_batch(nf, list(x), alpha[None, :], tol=tol,
                          max_iter=max_iter)[0]


def legendre_scalars(nf, x, alpha, newton_refine=3):
    """Legendre transform through jets: derivative-exact via refigured Newton steps.

    The float solution is polished by ``newton_refine`` Newton iterations in
    the inputs' (possibly jet-valued) arithmetic.  Because the Newton map has
    a vanishing Jacobian at the fixed point, k iterations make derivatives of
    order up to 2^k - 1 exact.
    """
    n = nf.n
    a_val = np.array([value_of(c) for c in alpha], dtype=float)
    if np.max(np.abs(a_val)) < ZERO_TOL:
        return [0.0] * n
    x_val = [value_of(c) for c in x]
    v0 = legendre(nf, x_val, a_val)
    v = list(v0)
    for _ in range(newton_refine):
        _, g = metric_scalars(nf, x, v)
        L = [sum(g[j][k] * v[k] for k in range(n)) for j in range(n)]
        ginv = mat_inv(g, n)
        r = [L[j] - alpha[j] for j in range(n)]
        v = [v[i] - sum(ginv[i][j] * r[j] for j in range(n)) for i in range(n)]
    return v


def dual_norm(nf, x, alpha):
    """Dual norm F*(alpha) = F(L*(alpha))."""
    v = legendre(nf, x, alpha)
    if np.max(np.abs(v)) < ZERO_TOL:
        return 0.0
    return float(value_of(nf.F(list(x), list(v))))


def dual_norm_batch(nf, x, A):
    if "dual_norm_batch" in nf.special:
        return nf.special["dual_norm_batch"](x, A)
    A = np.asarray(A, dtype=float)
    V = legendre_batch(nf, x, A)
    out = np.zeros(A.shape[0])
    live = np.max(np.abs(V), axis=1) >= ZERO_TOL
    if live.any():
        xs = _xselect(_xcomps(x, nf.n), np.where(live)[0], A.shape[0])
        out[live] = nf.F_batch(xs, V[live])
    return out


def dual_metric(nf, x, alpha):
    """g*(alpha): inverse fundamental tensor at the Legendre image."""
    return dual_metric_batch(nf, list(x), np.asarray(alpha, dtype=float)[None, :])[0]


def dual_metric_batch(nf, x, A):
    if "dual_metric_batch" in nf.special:
        return nf.special["dual_metric_batch"](x, A)
    V = legendre_batch(nf, x, A)
    g = metric_batch(nf, x, V)
    return np.linalg.inv(g)


# ---------------------------------------------------------------------------
# smoothness / convexity / reversibility constants
# ---------------------------------------------------------------------------


@dataclass
class SmoothnessConstants:
    """Sampled estimates (lower bounds) of the sup-defined norm constants."""

    S: float
    C: float
    Lam: float
    witness_S: tuple
    witness_C: tuple
    witness_Lam: tuple
    chart_samples: int
    dir_samples: int
    refine_rounds: int


def _unit_dirs(n, count):
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        th = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    # Fibonacci sphere
    k = np.arange(count) + 0.5
    phi = np.arccos(1 - 2 * k / count)
    theta = np.pi * (1 + 5**0.5) * k
    return np.stack(
        [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)],
        axis=-1,
    )


def _ratio_scan(nf, x, Vd, Wd):
    """max over (v, w) of g_v(w, w)/F^2(w) and its reciprocal, with argmaxes."""
    g = metric_batch(nf, list(x), Vd)
    F2w = nf.F_batch(list(x), Wd) ** 2
    quad = np.einsum("vij,wi,wj->vw", g, Wd, Wd)
    ratios = quad / F2w[None, :]
    iS = np.unravel_index(np.argmax(ratios), ratios.shape)
    iC = np.unravel_index(np.argmax(1.0 / ratios), ratios.shape)
    return ratios[iS], iS, 1.0 / ratios[iC], iC


def _refine_dirs(center, spread, count, n, rng):
    """Directions clustered around ``center`` within angular ``spread``."""
    if n == 2:
        th0 = np.arctan2(center[1], center[0])
        th = th0 + np.linspace(-spread, spread, count)
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    pert = rng.standard_normal((count, n)) * spread
    d = center[None, :] + pert
    d[0] = center
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def smoothness_constants(nf, chart_points=64, dir_samples=256, refine_rounds=5,
                         seed=0):
    """Sampled uniform-smoothness, uniform-convexity and reversibility constants.

    Sups over continua are estimated by a coarse scan over chart points and
    unit directions followed by local refinement around the incumbent
    maximizer; the reported values are certified lower bounds only at the
    stated resolution.
    """
    n = nf.n
    rng = np.random.default_rng(seed)
    if n == 1:
        return _constants_1d(nf, chart_points, dir_samples, refine_rounds)

    per_axis = max(2, int(round(chart_points ** (1.0 / n))))
    pts = nf.chart.sample_points(per_axis) if nf.x_dependent else np.zeros((1, n))
    dirs = _unit_dirs(n, dir_samples)

    S_best = C_best = Lam_best = -np.inf
    wS = wC = wL = None
    for x in pts:
        s, iS, c, iC = _ratio_scan(nf, x, dirs, dirs)
        if s > S_best:
            S_best, wS = s, (x.copy(), dirs[iS[0]].copy(), dirs[iS[1]].copy())
        if c > C_best:
            C_best, wC = c, (x.copy(), dirs[iC[0]].copy(), dirs[iC[1]].copy())
        Fv = nf.F_batch(list(x), dirs)
        Fr = nf.F_batch(list(x), -dirs)
        lam = Fv / Fr
        iL = int(np.argmax(lam))
        if lam[iL] > Lam_best:
            Lam_best, wL = lam[iL], (x.copy(), dirs[iL].copy())

    spread = 2.0 * (2 * np.pi / dir_samples)
    for r in range(refine_rounds):
        count = 65
        xS, vS, wSd = wS
        Vd = _refine_dirs(vS, spread, count, n, rng)
        Wd = _refine_dirs(wSd, spread, count, n, rng)
        s, iS, _, _ = _ratio_scan(nf, xS, Vd, Wd)
        if s > S_best:
            S_best, wS = s, (xS, Vd[iS[0]].copy(), Wd[iS[1]].copy())

        xC, vC, wCd = wC
        Vd = _refine_dirs(vC, spread, count, n, rng)
        Wd = _refine_dirs(wCd, spread, count, n, rng)
        _, _, c, iC = _ratio_scan(nf, xC, Vd, Wd)
        if c > C_best:
            C_best, wC = c, (xC, Vd[iC[0]].copy(), Wd[iC[1]].copy())

        xL, vL = wL
        Vd = _refine_dirs(vL, spread, count, n, rng)
        lam = nf.F_batch(list(xL), Vd) / nf.F_batch(list(xL), -Vd)
        iL = int(np.argmax(lam))
        if lam[iL] > Lam_best:
            Lam_best, wL = lam[iL], (xL, Vd[iL].copy())
        spread *= 0.25

    return SmoothnessConstants(
        float(S_best), float(C_best), float(Lam_best), wS, wC, wL,
        len(pts), dir_samples, refine_rounds,
    )


def _constants_1d(nf, chart_points, dir_samples, refine_rounds):
    pts = (nf.chart.sample_points(chart_points)
           if nf.x_dependent else np.zeros((1, 1)))
    S_best = C_best = Lam_best = -np.inf
    wS = wC = wL = None
    signs = np.array([[1.0], [-1.0]])
    for x in pts:
        F = nf.F_batch(list(x), signs)
        for sv in range(2):
            for sw in range(2):
                ratio = (F[sv] / F[sw]) ** 2
                if ratio > S_best:
                    S_best, wS = ratio, (x.copy(), signs[sv], signs[sw])
                if 1.0 / ratio > C_best:
                    C_best, wC = 1.0 / ratio, (x.copy(), signs[sv], signs[sw])
        lam = max(F[0] / F[1], F[1] / F[0])
        if lam > Lam_best:
            Lam_best = lam
            wL = (x.copy(), signs[0] if F[0] > F[1] else signs[1])
    return SmoothnessConstants(
        float(S_best), float(C_best), float(Lam_best), wS, wC, wL,
        len(pts), 2, refine_rounds,
    )
