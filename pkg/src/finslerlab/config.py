"""Run configuration: TOML schema, round-trip serialization, model builders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from finslerlab import jets
from finslerlab.errors import ConfigError
from finslerlab.fields import ScalarField
from finslerlab.norms import (
    NormField,
    asymmetric_1d,
    euclidean,
    interval,
    randers,
    riemannian,
    smoothed_pnorm,
    torus,
)

KNOWN_FAMILIES = {"euclidean", "riemannian", "randers", "smoothed-pnorm",
                  "asymmetric-1d"}
KNOWN_SUITES = {"bochner", "improved", "l2", "l1", "poincare", "variance",
                "key", "char", "isoperimetry"}

DEFAULTS = {
    "seed": 0,
    "out_dir": "out",
    "metric": {"family": "euclidean", "dim": 1},
    "domain": {"kind": "torus", "periods": [2 * math.pi], "nodes": [256]},
    "weight": {"kind": "none", "K": 0.0},
    "solver": {"dt": 1e-3, "T": 0.1},
    "initial": {"kind": "cos", "amplitude": 1.0, "radius": 2.0},
    "geodesic": {"x0": [0.0], "v0": [1.0], "T": 1.0, "dt": 1e-2},
    "checks": {
        "suites": [],
        "declared_K": math.nan,
        "slack_C": math.nan,
        "interior_margin": 2.0,
        "theta_grid": [round(0.05 * k, 2) for k in range(1, 20)],
        "dims_N": math.inf,
        "samples_per_axis": 12,
    },
}


@dataclass
class RunConfig:
    data: dict = field(default_factory=dict)

    def section(self, name):
        out = dict(DEFAULTS.get(name, {}))
        out.update(self.data.get(name, {}))
        return out

    @property
    def seed(self):
        return int(self.data.get("seed", DEFAULTS["seed"]))

    @property
    def out_dir(self):
        return str(self.data.get("out_dir", DEFAULTS["out_dir"]))


def parse_config(text):
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"TOML parse error: {e}") from e
    cfg = RunConfig(data)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    met = cfg.section("metric")
    if met["family"] not in KNOWN_FAMILIES:
        raise ConfigError(f"unknown metric family {met['family']!r}")
    dom = cfg.section("domain")
    if dom["kind"] not in {"torus", "interval"}:
        raise ConfigError(f"unknown domain kind {dom['kind']!r}")
    wt = cfg.section("weight")
    if wt["kind"] not in {"none", "gaussian"}:
        raise ConfigError(f"unknown weight kind {wt['kind']!r}")
    for s in cfg.section("checks")["suites"]:
        if s not in KNOWN_SUITES:
            raise ConfigError(f"unknown check suite {s!r}")
    ini = cfg.section("initial")
    if ini["kind"] not in {"constant", "cos", "bump", "sinsum", "coordinate"}:
        raise ConfigError(f"unknown initial datum {ini['kind']!r}")


# ---------------------------------------------------------------------------
# minimal TOML writer (round-trip companion of parse_config)
# ---------------------------------------------------------------------------


def _toml_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        if math.isnan(f):
            return "nan"
        s = repr(f)
        return s if ("." in s or "e" in s or "E" in s) else s + ".0"
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(c) for c in v) + "]"
    raise ConfigError(f"cannot serialize value of type {type(v)}")


def serialize_config(cfg):
    data = cfg.data
    lines = []
    for key in sorted(k for k in data if not isinstance(data[k], dict)):
        lines.append(f"{key} = {_toml_value(data[key])}")
    for sect in sorted(k for k in data if isinstance(data[k], dict)):
        lines.append("")
        lines.append(f"[{sect}]")
        for key in sorted(data[sect]):
            lines.append(f"{key} = {_toml_value(data[sect][key])}")
    return "\n".join(lines).lstrip("\n") + "\n"


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def build_chart(cfg, dim):
    dom = cfg.section("domain")
    if dom["kind"] == "torus":
        periods = [float(p) for p in dom.get("periods", [2 * math.pi] * dim)]
        if len(periods) != dim:
            raise ConfigError("periods length must match metric dim")
        return torus(periods)
    halfwidths = [float(h) for h in dom.get("halfwidths", [6.0] * dim)]
    if len(halfwidths) != dim:
        raise ConfigError("halfwidths length must match metric dim")
    return interval(halfwidths)


def build_weight(cfg, dim):
    wt = cfg.section("weight")
    if wt["kind"] == "none":
        return None
    K = float(wt["K"])

    def phi(x):
        s = x[0] * x[0]
        for c in x[1:]:
            s = s + c * c
        return -0.5 * K * s

    return phi


def build_norm(cfg) -> NormField:
    met = cfg.section("metric")
    dim = int(met["dim"])
    chart = build_chart(cfg, dim)
    weight = build_weight(cfg, dim)
    fam = met["family"]
    if fam == "euclidean":
        return euclidean(dim, chart=chart, weight=weight)
    if fam == "riemannian":
        a = np.asarray(met.get("a", np.eye(dim).tolist()), dtype=float)
        return riemannian(a, dim, chart=chart, weight=weight)
    if fam == "randers":
        a = np.asarray(met.get("a", np.eye(dim).tolist()), dtype=float)
        wave = float(met.get("b_wave", 0.0))
        if wave != 0.0:
            if dim != 2:
                raise ConfigError("b_wave requires dim = 2")

            def b(x, _w=wave):
                return [_w * jets.sin(x[1]), 0.0]

            return randers(a, b, dim, chart=chart, weight=weight)
        b = [float(c) for c in met.get("b", [0.0] * dim)]
        return randers(a, b, dim, chart=chart, weight=weight)
    if fam == "smoothed-pnorm":
        return smoothed_pnorm(float(met.get("p", 4.0)),
                              float(met.get("eps_smooth", 0.5)),
                              dim, chart=chart, weight=weight)
    if fam == "asymmetric-1d":
        if dim != 1:
            raise ConfigError("asymmetric-1d requires dim = 1")
        return asymmetric_1d(float(met.get("f_plus", 1.0)),
                             float(met.get("f_minus", 2.0)),
                             chart=chart, weight=weight)
    raise ConfigError(f"unhandled family {fam!r}")


def build_initial(cfg, grid):
    ini = cfg.section("initial")
    amp = float(ini.get("amplitude", 1.0))
    x = grid.coords[:, 0]
    if ini["kind"] == "constant":
        return np.full(grid.nnodes, amp)
    if ini["kind"] == "cos":
        return amp * np.cos(x)
    if ini["kind"] == "coordinate":
        return amp * x
    if ini["kind"] == "bump":
        r = float(ini.get("radius", 2.0))
        out = np.zeros(grid.nnodes)
        inside = np.abs(x) < r
        out[inside] = amp * np.exp(1 - 1 / (1 - (x[inside] / r) ** 2))
        return out
    if ini["kind"] == "sinsum":
        if grid.n < 2:
            return amp * np.sin(x)
        return amp * (np.sin(x) + 0.5 * np.cos(grid.coords[:, 1]))
    raise ConfigError(f"unhandled initial datum {ini['kind']!r}")


def pointwise_field(cfg, nf) -> ScalarField:
    if nf.n == 1:
        return ScalarField(lambda x: jets.sin(x[0]))
    return ScalarField(lambda x: jets.sin(x[0]) + 0.5 * jets.cos(x[1]))
