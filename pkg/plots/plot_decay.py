#!/usr/bin/env python3
"""Variance-decay figure: measured curve against the exponential reference.

Usage: plot_decay.py --in decay.csv --out decay.png
"""

import sys

import matplotlib.pyplot as plt
import numpy as np

sys.path.insert(0, __file__.rsplit("/", 1)[0])
from figlib import cli_io, load_csv

REQUIRED = ["t", "variance", "reference"]


def build_figure(data):
    t = data["t"]
    var = data["variance"]
    ref = data["reference"]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if np.max(var) <= 1e-14:
        # degenerate (constant) trace: nothing decays, draw the flat zero line
        ax.plot(t, var, "o-", color="black", label="variance")
        ax.set_ylim(-1e-12, 1e-12)
    else:
        ax.semilogy(t, np.maximum(var, 1e-300), "o-", color="black",
                    label="variance")
        ax.semilogy(t, np.maximum(ref, 1e-300), "--", color="tab:red",
                    label="exponential reference rate")
    ax.set_xlabel("t")
    ax.set_ylabel("variance")
    ax.set_title("variance decay under the linearized flow")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, which="both")
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
