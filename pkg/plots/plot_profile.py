#!/usr/bin/env python3
"""Isoperimetric profile figure: computed boundary points against both bounds.

Usage: plot_profile.py --in profile.csv --out profile.png
"""

import sys

import matplotlib.pyplot as plt
import numpy as np

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from figlib import cli_io, load_csv

REQUIRED = ["theta", "m_plus", "i_k", "needle_bound"]


def build_figure(data):
    order = np.argsort(data["theta"])
    th = data["theta"][order]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(th, data["i_k"][order], "-", color="tab:blue", lw=1.5,
            label="Gaussian model bound")
    ax.plot(th, data["needle_bound"][order], "--", color="tab:orange", lw=1.2,
            label="needle (reversibility-scaled) bound")
    ax.plot(th, data["m_plus"][order], "o", color="black", ms=4, mfc="none",
            label="computed boundary measure")
    ax.set_xlabel(r"mass $\theta$")
    ax.set_ylabel("boundary measure")
    ax.set_title("isoperimetric profile")
    ax.legend(loc="lower center", fontsize=8)
    ax.grid(alpha=0.3)
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
