"""Synthetic benchmark table with planted structure.

Six feature columns and a binary label.  ``shade`` is a deterministic
function of ``color`` (the planted inter-column rule a generative model
must learn), and the label is a known function of ``color`` alone so
the black-box classifier is learnable to high accuracy.  Because the
label depends only on ``color``, every counterfactual flip must edit
``color`` -- and a plausible flip must edit ``shade`` with it.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = [
    "HEADER",
    "NUMERIC_COLUMNS",
    "LABEL_COLUMN",
    "SHADE_OF",
    "make_benchmark",
    "write_csv",
    "rule_violation_rate",
]

COLORS = ("red", "green", "blue", "amber", "violet")
SHADE_OF = {
    "red": "crimson",
    "green": "olive",
    "blue": "navy",
    "amber": "honey",
    "violet": "plum",
}
MATERIALS = ("wood", "steel", "glass", "clay")
FINISHES = ("matte", "gloss", "satin")

HEADER = ["color", "shade", "material", "size", "weight", "finish", "label"]
NUMERIC_COLUMNS = ["size", "weight"]
LABEL_COLUMN = "label"
BIN_COUNT = 8
BINNING = "width"


def _label(color: str) -> str:
    return "pos" if color in ("amber", "violet") else "neg"


MATERIAL_P = (0.85, 0.07, 0.05, 0.03)
FINISH_P = (0.85, 0.10, 0.05)


def make_benchmark(n_rows: int = 2000, seed: int = 7) -> tuple:
    """Generate (header, records) for the benchmark table.

    The nuisance columns are deliberately peaked (skewed categoricals,
    bell-shaped numerics) so a generative model has an unambiguous
    high-density region to restore them to.
    """
    rng = np.random.default_rng(seed)
    records = []
    for _ in range(n_rows):
        color = COLORS[rng.integers(len(COLORS))]
        shade = SHADE_OF[color]
        material = MATERIALS[rng.choice(len(MATERIALS), p=MATERIAL_P)]
        size = float(np.clip(rng.normal(55.0, 6.0), 0.0, 100.0))
        weight = float(np.clip(rng.normal(50.0, 4.0), 0.0, 100.0))
        finish = FINISHES[rng.choice(len(FINISHES), p=FINISH_P)]
        records.append(
            [color, shade, material, f"{size:.2f}", f"{weight:.2f}", finish,
             _label(color)]
        )
    return list(HEADER), records


def benchmark_dataset(n_rows: int = 2000, seed: int = 7):
    """Generate and bin the benchmark in one call."""
    from .tabular import build_dataset

    header, records = make_benchmark(n_rows, seed)
    return build_dataset(header, records, NUMERIC_COLUMNS, LABEL_COLUMN,
                         bin_count=BIN_COUNT, binning=BINNING)


def write_csv(path: str, header, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(records)


def rule_violation_rate(rows, schema) -> float:
    """Fraction of decoded rows whose shade does not match their color."""
    names = [c.name for c in schema]
    ci, si = names.index("color"), names.index("shade")
    bad = sum(1 for r in rows if SHADE_OF.get(r[ci]) != r[si])
    return bad / len(rows) if rows else 0.0
