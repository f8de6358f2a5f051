#!/usr/bin/env python3
"""Gradient-estimate residual heatmap over nodes and time pairs.

Usage: plot_residuals.py --in residuals.csv --out residuals.png
"""

import sys

import matplotlib.pyplot as plt
import numpy as np

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from figlib import cli_io, load_csv

REQUIRED = ["s", "t", "x1", "residual", "tolerance"]


def build_figure(data):
    pairs = sorted(set(zip(data["s"], data["t"])))
    xs = np.unique(data["x1"])
    mat = np.full((len(pairs), len(xs)), np.nan)
    slack = np.zeros(len(pairs))
    for k, (s, t) in enumerate(pairs):
        sel = (data["s"] == s) & (data["t"] == t)
        cols = np.searchsorted(xs, data["x1"][sel])
        mat[k, cols] = data["residual"][sel]
        slack[k] = data["tolerance"][sel].max()
    fig, axes = plt.subplots(2, 1, figsize=(6.5, 5.2), sharex=True,
                             height_ratios=[3, 1])
    im = axes[0].imshow(mat, aspect="auto", origin="lower", cmap="RdBu",
                        extent=[xs[0], xs[-1], -0.5, len(pairs) - 0.5])
    axes[0].set_yticks(range(len(pairs)))
    axes[0].set_yticklabels([f"s={s:g}, t={t:g}" for s, t in pairs], fontsize=7)
    axes[0].set_title("transport-estimate margin (positive = satisfied)")
    fig.colorbar(im, ax=axes[0], shrink=0.9)
    # worst margin after slack per pair: the all-nonnegative summary view
    after = np.nanmin(mat, axis=1) + slack
    axes[1].bar(range(len(pairs)), after, color="tab:green")
    axes[1].axhline(0.0, color="black", lw=0.8)
    axes[1].set_ylabel("worst + slack")
    axes[1].set_xticks(range(len(pairs)))
    axes[1].set_xticklabels([f"{k}" for k in range(len(pairs))], fontsize=7)
    axes[0].set_xlabel("x")
    fig.tight_layout()
    return fig


def main():
    args = cli_io(__doc__)
    data = load_csv(args.input, REQUIRED)
    fig = build_figure(data)
    fig.savefig(args.output, dpi=150)
    return 0


if __name__ == "__main__":
    sys.exit(main())
