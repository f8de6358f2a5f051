"""Tests for the figure scripts: schema handling and benchmark regeneration."""

import os
import subprocess
import sys

import numpy as np
import pytest

HERE = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
BENCH = os.path.join(HERE, "benchmarks")
sys.path.insert(0, HERE)

from figlib import SchemaError, load_csv  # noqa: E402


def run_script(name, inp, out):
    return subprocess.run(
        [sys.executable, os.path.join(HERE, name), "--in", inp, "--out", out],
        capture_output=True, text=True,
    )


@pytest.mark.parametrize(
    "script,bench",
    [
        ("plot_profile.py", "profile_symmetric.csv"),
        ("plot_profile.py", "profile_asymmetric.csv"),
        ("plot_decay.py", "decay_gaussian.csv"),
        ("plot_residuals.py", "residuals_gaussian.csv"),
    ],
)
def test_scripts_render_benchmarks(tmp_path, script, bench):
    out = str(tmp_path / (bench.replace(".csv", ".png")))
    res = run_script(script, os.path.join(BENCH, bench), out)
    assert res.returncode == 0, res.stderr
    assert os.path.getsize(out) > 5_000


def test_empty_csv_rejected(tmp_path):
    bad = tmp_path / "empty.csv"
    bad.write_text("")
    res = run_script("plot_profile.py", str(bad), str(tmp_path / "x.png"))
    assert res.returncode != 0


def test_missing_columns_rejected(tmp_path):
    bad = tmp_path / "short.csv"
    bad.write_text("theta,m_plus\n0.5,0.4\n")
    res = run_script("plot_profile.py", str(bad), str(tmp_path / "x.png"))
    assert res.returncode != 0
    assert "missing columns" in res.stderr


def test_profile_overlay_symmetric_model():
    # the computed points must sit on the model curve for the symmetric
    # benchmark, and the reversibility-scaled bound must coincide with it
    data = load_csv(os.path.join(BENCH, "profile_symmetric.csv"),
                    ["theta", "m_plus", "i_k", "needle_bound"])
    assert np.abs(data["m_plus"] - data["i_k"]).max() <= 1e-6
    np.testing.assert_allclose(data["needle_bound"], data["i_k"], rtol=1e-12)


def test_profile_figure_content():
    import plot_profile

    data = load_csv(os.path.join(BENCH, "profile_symmetric.csv"),
                    plot_profile.REQUIRED)
    fig = plot_profile.build_figure(data)
    ax = fig.axes[0]
    assert len(ax.lines) == 3
    labels = [ln.get_label() for ln in ax.lines]
    assert any("computed" in lb for lb in labels)
    # the scatter markers coincide with the model curve (visual overlay)
    model = ax.lines[0].get_ydata()
    pts = ax.lines[2].get_ydata()
    assert np.abs(np.asarray(model) - np.asarray(pts)).max() <= 1e-6


def test_decay_constant_trace_flat_zero(tmp_path):
    flat = tmp_path / "flat.csv"
    flat.write_text("t,variance,reference\n0.0,0.0,0.0\n0.5,0.0,0.0\n1.0,0.0,0.0\n")
    out = tmp_path / "flat.png"
    res = run_script("plot_decay.py", str(flat), str(out))
    assert res.returncode == 0
    assert os.path.getsize(out) > 2_000


def test_residual_map_nonnegative_after_slack():
    data = load_csv(os.path.join(BENCH, "residuals_gaussian.csv"),
                    ["s", "t", "x1", "residual", "tolerance"])
    assert np.min(data["residual"] + data["tolerance"]) >= 0.0


def test_decay_reference_rate_dominates():
    # log-variance decays at least as fast as the reference after rescaling
    data = load_csv(os.path.join(BENCH, "decay_gaussian.csv"),
                    ["t", "variance", "reference"])
    t, v, ref = data["t"], data["variance"], data["reference"]
    slope_meas = np.polyfit(t, np.log(v), 1)[0]
    slope_ref = np.polyfit(t, np.log(ref), 1)[0]
    assert slope_meas <= slope_ref * (1 - 0.05) + 1e-12
