"""Command-line entry point: configure a model, run flows and checks, emit CSV.

Exit codes: 0 all checks pass, 1 a check or run gate failed, 2 usage or
configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from finslerlab import checks as C
from finslerlab import config as cfgmod
from finslerlab import isoperimetry as iso
from finslerlab.errors import ConfigError, CurvatureNotCertified, FinslerLabError
from finslerlab.fields import geodesic_shoot, weighted_ricci
from finslerlab.heat import build_grid, run_flow
from finslerlab.norms import euclidean, reverse, smoothness_constants, torus

GATE_TOL_ENERGY = 1e-12
GATE_TOL_MASS = 1e-10


def _write(path, text):
    with open(path, "w", newline="\n") as f:
        f.write(text)


def _csv(rows, header):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(c) if isinstance(c, float) else str(c)
                              for c in row))
    return "\n".join(lines) + "\n"


def _outdir(args, cfg):
    out = args.out or cfg.out_dir
    os.makedirs(out, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_norm_info(cfg, args):
    nf = cfgmod.build_norm(cfg)
    seed = args.seed if args.seed is not None else cfg.seed
    sc = smoothness_constants(nf, seed=seed)
    bound = min(math.sqrt(sc.S), math.sqrt(sc.C))
    ok = sc.Lam <= bound + 1e-6
    print(f"S_F      = {sc.S:.9g}")
    print(f"C_F      = {sc.C:.9g}")
    print(f"Lambda_F = {sc.Lam:.9g}")
    print(f"Lambda_F <= min(sqrt(S_F), sqrt(C_F)) + 1e-6 : "
          f"{'PASS' if ok else 'FAIL'} ({sc.Lam:.9g} vs {bound:.9g})")
    out = _outdir(args, cfg)
    _write(os.path.join(out, "constants.csv"),
           _csv([[sc.S, sc.C, sc.Lam, int(ok)]],
                ["S_F", "C_F", "Lambda_F", "reversibility_bound_pass"]))
    return 0 if ok else 1


def cmd_geodesic(cfg, args):
    nf = cfgmod.build_norm(cfg)
    geo = cfg.section("geodesic")
    x0 = [float(c) for c in geo["x0"]]
    v0 = [float(c) for c in geo["v0"]]
    if "geodesic" not in cfg.data and len(x0) != nf.n:
        x0 = [0.0] * nf.n
        v0 = [1.0] + [0.5] * (nf.n - 1)
    if len(x0) != nf.n or len(v0) != nf.n:
        raise ConfigError("geodesic x0/v0 length must match metric dim")
    traj = geodesic_shoot(nf, x0, v0, float(geo["T"]), float(geo["dt"]))
    rows = []
    for s in traj:
        rows.append([s.t, *map(float, s.x), *map(float, s.v),
                     float(nf.F(list(s.x), list(s.v)))])
    hdr = (["t"] + [f"x{i+1}" for i in range(nf.n)]
           + [f"v{i+1}" for i in range(nf.n)] + ["speed"])
    out = _outdir(args, cfg)
    _write(os.path.join(out, "geodesic.csv"), _csv(rows, hdr))
    drift = max(abs(r[-1] - rows[0][-1]) for r in rows)
    print(f"geodesic: {len(rows)} states, speed drift {drift:.3e}")
    return 0 if drift <= 1e-6 * max(1.0, rows[0][-1]) else 1


def cmd_curvature(cfg, args):
    nf = cfgmod.build_norm(cfg)
    Npar = float(cfg.section("checks")["dims_N"])
    pts = nf.chart.sample_points(4 if nf.n > 1 else 16)
    if nf.n == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        th = np.linspace(0, 2 * np.pi, 8, endpoint=False) + 0.05
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    rows = []
    kmin = math.inf
    for x in pts:
        for v in dirs:
            F2 = float(nf.F(list(x), list(v))) ** 2
            r = weighted_ricci(nf, x, v, Npar)
            kmin = min(kmin, r / F2)
            rows.append([*map(float, x), *map(float, v), r, F2, r / F2])
    hdr = ([f"x{i+1}" for i in range(nf.n)] + [f"v{i+1}" for i in range(nf.n)]
           + ["ric", "F2", "ratio"])
    out = _outdir(args, cfg)
    _write(os.path.join(out, "curvature.csv"), _csv(rows, hdr))
    print(f"curvature: {len(rows)} samples, min Ric/F^2 = {kmin:.6g}")
    return 0


def cmd_heat(cfg, args):
    nf = cfgmod.build_norm(cfg)
    dom = cfg.section("domain")
    sol = cfg.section("solver")
    grid = build_grid(nf, tuple(int(m) for m in dom["nodes"]))
    u0 = cfgmod.build_initial(cfg, grid)
    trace = run_flow(nf, grid, u0, float(sol["T"]), float(sol["dt"]))
    out = _outdir(args, cfg)
    rows = []
    stride = max(1, len(trace.times) // 64)
    snaps = sorted(set(range(0, len(trace.times), stride)) | {len(trace.times) - 1})
    for k in snaps:
        for i in range(grid.nnodes):
            rows.append([float(trace.times[k]), i,
                         *map(float, grid.coords[i]),
                         float(trace.states[k, i])])
    hdr = ["t", "node"] + [f"x{i+1}" for i in range(nf.n)] + ["u"]
    _write(os.path.join(out, "trace.csv"), _csv(rows, hdr))
    mass = trace.states @ grid.weights
    _write(
        os.path.join(out, "energies.csv"),
        _csv(
            [[float(t), float(e), float(m)] for t, e, m in
             zip(trace.times, trace.energies, mass)],
            ["t", "energy", "mass"],
        ),
    )
    dE = float(np.diff(trace.energies).max()) if len(trace.energies) > 1 else 0.0
    drift = float(np.abs(mass - mass[0]).max())
    print(f"heat: {len(trace.times) - 1} steps, max energy increase {dE:.3e}, "
          f"mass drift {drift:.3e}")
    if dE > GATE_TOL_ENERGY * max(1.0, trace.energies[0]):
        print("FAIL: energy not monotone")
        return 1
    if drift > GATE_TOL_MASS:
        print("FAIL: mass drift exceeds gate")
        return 1
    return 0


# -- verify ------------------------------------------------------------------


def _declared_K(cfg):
    ck = cfg.section("checks")
    if not math.isnan(float(ck["declared_K"])):
        return float(ck["declared_K"])
    return float(cfg.section("weight")["K"])


def _flow_from_config(cfg, nf):
    dom = cfg.section("domain")
    sol = cfg.section("solver")
    fb = sol.get("fallback_direction")
    grid = build_grid(nf, tuple(int(m) for m in dom["nodes"]),
                      fallback_direction=fb)
    u0 = cfgmod.build_initial(cfg, grid)
    return grid, run_flow(nf, grid, u0, float(sol["T"]), float(sol["dt"]))


def _frozen_slack(cfg, nodes, dt):
    """Slack constant, from config when set, else fitted on the flat benchmark."""
    ck = cfg.section("checks")
    if not math.isnan(float(ck["slack_C"])):
        return float(ck["slack_C"])
    nfc = euclidean(1, chart=torus([2 * math.pi]))
    gc = build_grid(nfc, nodes)
    trc = run_flow(nfc, gc, np.cos(gc.coords[:, 0]), 0.3, dt)
    pairs = [(0.0, dt, 0.0), (0.1, 0.1 + dt, 0.0), (0.1, 0.2, 0.0),
             (0.0, 0.3, 0.0), (0.3 - dt, 0.3, 0.0)]
    return C.fit_l2_slack(nfc, gc, trc, pairs)


def _suite_reports(cfg, suite, rng):
    nf = cfgmod.build_norm(cfg)
    ck = cfg.section("checks")
    sol = cfg.section("solver")
    K = _declared_K(cfg)
    margin = float(ck["interior_margin"])
    reports = []

    if suite in ("bochner", "improved"):
        u = cfgmod.pointwise_field(cfg, nf)
        pts = C.sample_smooth_locus(nf, u, per_axis=int(ck["samples_per_axis"]))
        Npar = float(ck["dims_N"])
        if suite == "bochner":
            rep = C.check_bochner(nf, u, K, Npar, pts)
            if "identity_pass" in rep.details:
                rep.passed = rep.passed and rep.details["identity_pass"]
            reports.append(rep)
        else:
            rep = C.check_improved_bochner(nf, u, K, pts)
            rep.passed = rep.passed and rep.details["pointwise_prime_pass"]
            reports.append(rep)

    elif suite in ("l2", "l1"):
        grid, trace = _flow_from_config(cfg, nf)
        Cfit = _frozen_slack(cfg, grid.shape[0], trace.dt)
        T = float(sol["T"])
        pairs = [(0.1 * T, 0.5 * T), (0.1 * T, T), (0.5 * T, T)]
        for s, t in pairs:
            s = round(s / trace.dt) * trace.dt
            t = round(t / trace.dt) * trace.dt
            if suite == "l2":
                reports.append(C.check_l2_gradient(trace, s, t, K, Cfit, margin,
                                                   keep_nodewise=True))
            else:
                rep = C.check_l1_gradient(trace, s, t, K, Cfit, margin)
                if "delF_identity_pass" in rep.details:
                    rep.passed = rep.passed and rep.details["delF_identity_pass"]
                reports.append(rep)

    elif suite == "poincare":
        grid, _ = _flow_from_config(cfg, nf)
        x = grid.coords[:, 0]
        rep = C.check_poincare(nf, grid, x.copy(), K)
        gap = rep.details["gap"]
        rep_near = C.CheckReport.identity("poincare_linear_gap", [gap], 2e-3,
                                          details=rep.details)
        reports.append(rep_near)
        L = nf.chart.halfwidths[0] if nf.chart.kind == "interval" else math.pi
        worst = math.inf
        for _ in range(20):
            coef = rng.normal(size=(2, 5))
            f = np.zeros_like(x)
            for k in range(1, 6):
                f += (coef[0, k - 1] * np.sin(k * np.pi * x / L)
                      + coef[1, k - 1] * np.cos(k * np.pi * x / L))
            r = C.check_poincare(nf, grid, f, K)
            worst = min(worst, r.worst_residual)
        reports.append(C.CheckReport.inequality("poincare_random", [worst], 1e-9))

    elif suite == "variance":
        grid, trace = _flow_from_config(cfg, nf)
        sc = smoothness_constants(nf, seed=cfg.seed)
        T = float(sol["T"])
        times = [round(k * T / 4 / trace.dt) * trace.dt for k in range(5)]
        f = grid.coords[:, 0].copy()
        reports.append(C.check_variance_decay(trace, f, times, K, sc.S))

    elif suite == "key":
        grid, trace = _flow_from_config(cfg, nf)
        T = float(sol["T"])
        alphas = [0.0] + ([1.0 / K] if K > 0 else [1.0])
        for a in alphas:
            reports.append(C.check_key_estimate(trace, a, T, K,
                                                interior_margin=margin))

    elif suite == "char":
        u = cfgmod.pointwise_field(cfg, nf)
        dom = cfg.section("domain")
        reports.extend(
            C.characterization_suite(nf, u, _initial_closure(cfg),
                                     grid_nodes=tuple(int(m) for m in dom["nodes"]),
                                     T=float(sol["T"]), dt=float(sol["dt"]),
                                     interior_margin=margin)
        )
        rev = reverse(nf)
        reports.extend(
            C.characterization_suite(rev, u, _initial_closure(cfg),
                                     grid_nodes=tuple(int(m) for m in dom["nodes"]),
                                     T=float(sol["T"]), dt=float(sol["dt"]),
                                     interior_margin=margin)
        )

    elif suite == "isoperimetry":
        reports.extend(_isoperimetry_reports(cfg, nf))

    else:
        raise ConfigError(f"unknown suite {suite!r}")
    return reports


class _GridShim:
    def __init__(self, coords):
        self.coords = np.asarray(coords)
        self.n = self.coords.shape[1]
        self.nnodes = len(self.coords)


def _initial_closure(cfg):
    def fun(xcomps):
        coords = np.stack([np.asarray(c, dtype=float) for c in xcomps], axis=-1)
        return cfgmod.build_initial(cfg, _GridShim(coords))

    return fun


def _isoperimetry_reports(cfg, nf):
    ck = cfg.section("checks")
    thetas = [float(t) for t in ck["theta_grid"]]
    rows = []
    reports = []
    sc = smoothness_constants(nf, seed=cfg.seed)
    if nf.n == 1:
        Kw = float(cfg.section("weight")["K"])
        L = nf.chart.halfwidths[0]
        pot = lambda s: -float(np.atleast_1d(nf.weight([s]))[0])
        dmink = lambda a, b: float(nf.F([a], [b - a]))
        K_eff = iso.k_convexity_modulus(pot, dmink, -0.8 * L, 0.8 * L)
        total = iso.line_mass(nf, -L, L)
        resid = []
        for th in thetas:
            c_fwd = _threshold_for_mass(nf, th, total, "forward")
            fw = iso.halfline_profile_1d(nf, c_fwd, "forward", total)
            c_bwd = _threshold_for_mass(nf, th, total, "backward")
            bw = iso.halfline_profile_1d(nf, c_bwd, "backward", total)
            m = min(fw.boundary, bw.boundary)
            ik = iso.gaussian_profile(K_eff, th)
            needle = ik / sc.Lam
            rows.append([th, m, ik, needle, fw.witness_c if fw.boundary <= bw.boundary
                         else bw.witness_c])
            resid.append(m - ik)
        reports.append(C.CheckReport.inequality(
            "bakry_ledoux_1d", resid, 1e-6, thetas, {"K_eff": K_eff}))
        improvement = [r[2] - r[3] for r in rows]
        reports.append(C.CheckReport.inequality(
            "needle_bound_improved", improvement, 1e-12, thetas,
            {"Lambda_F": sc.Lam}))
    else:
        grid = build_grid(nf, tuple(int(m) for m in cfg.section("domain")["nodes"]))
        pts_x = nf.chart.sample_points(3)
        K_cert = C.certify_curvature(nf, pts_x, math.inf, dirs_per_point=16)
        x = grid.coords[:, 0]
        L = nf.chart.halfwidths[0]
        seed_mask = x <= -0.55 * L
        levels = np.linspace(0.2, 2.6 * L, 40)
        pts = iso.profile_sweep_2d(nf, grid, seed_mask, levels)
        resid = []
        for p in pts:
            if 0.02 < p.theta < 0.98:
                ik = iso.gaussian_profile(K_cert, p.theta)
                rows.append([p.theta, p.boundary, ik, ik / sc.Lam, p.witness_c])
                resid.append(p.boundary - ik)
        reports.append(C.CheckReport.inequality(
            "bakry_ledoux_2d", resid, 5e-2, None, {"K_cert": K_cert}))
    reports[-1].details["profile_rows"] = rows
    return reports


def _threshold_for_mass(nf, theta, total, direction):
    """Invert the half-line mass map by bisection on the threshold."""
    L = nf.chart.halfwidths[0]
    lo, hi = -L, L
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        th = iso.line_mass(nf, -L, mid) / total
        if direction == "backward":
            th = 1.0 - th
        if (th < theta) == (direction == "forward"):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def cmd_verify(cfg, args):
    suites = cfg.section("checks")["suites"]
    if args.suite:
        suites = [args.suite]
    if not suites:
        print("no check suites configured", file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed if args.seed is not None else cfg.seed)
    reports = []
    for suite in suites:
        try:
            reports.extend(_suite_reports(cfg, suite, rng))
        except CurvatureNotCertified as e:
            reports.append(C.CheckReport(
                name=f"{suite}_certification", kind="inequality", samples=0,
                worst_residual=-math.inf, tolerance=0.0, passed=False,
                details={"error": str(e)}))
    out = _outdir(args, cfg)
    sidecars = [
        ("profile_rows", "profile.csv",
         ["theta", "m_plus", "i_k", "needle_bound", "witness_c"]),
        ("decay_rows", "decay.csv", ["t", "variance", "reference"]),
        ("residual_rows", "residuals.csv",
         ["s", "t", "x1", "residual", "tolerance"]),
    ]
    for key, fname, header in sidecars:
        rows = []
        for r in reports:
            rows.extend(r.details.pop(key, []))
        if rows:
            _write(os.path.join(out, fname), _csv(rows, header))
    _write(os.path.join(out, "checks.csv"), C.reports_to_csv(reports))
    summary = C.summarize(reports)
    _write(os.path.join(out, "summary.txt"), summary)
    print(summary, end="")
    return 0 if all(r.passed for r in reports) else 1


def cmd_isoperimetry(cfg, args):
    args.suite = "isoperimetry"
    return cmd_verify(cfg, args)


# ---------------------------------------------------------------------------


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="finsler-lab",
        description="anisotropic-norm toolkit: flows, curvature checks, profiles",
    )
    parser.add_argument("command",
                        choices=["norm-info", "geodesic", "curvature", "heat",
                                 "verify", "isoperimetry"])
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--suite", default=None,
                        help="restrict verify to a single suite")
    args = parser.parse_args(argv)

    try:
        with open(args.config) as f:
            cfg = cfgmod.parse_config(f.read())
    except (OSError, ConfigError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    handlers = {
        "norm-info": cmd_norm_info,
        "geodesic": cmd_geodesic,
        "curvature": cmd_curvature,
        "heat": cmd_heat,
        "verify": cmd_verify,
        "isoperimetry": cmd_isoperimetry,
    }
    try:
        return handlers[args.command](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except FinslerLabError as e:
        print(f"check failure: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
