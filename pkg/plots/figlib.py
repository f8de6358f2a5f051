"""Shared CSV loading and figure plumbing for the plot scripts.

The scripts render what the CSV columns say and nothing else: no quantity
is recomputed from the model, so a figure is exactly a view of one artifact
file emitted by the CLI.
"""

import argparse
import csv

import matplotlib

matplotlib.use("Agg")

import numpy as np


class SchemaError(ValueError):
    """The CSV is empty or lacks a required column."""


def load_csv(path, required):
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return {c: np.array([float(r[c]) for r in rows]) for c in reader.fieldnames}


def cli_io(description):
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--in", dest="input", required=True, help="input CSV")
    parser.add_argument("--out", dest="output", required=True, help="output image")
    return parser.parse_args()
