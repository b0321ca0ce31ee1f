"""Bundled reference values for the four study tables.

Loaded only by the `tables` CLI command for side-by-side comparison; the
math core never reads them.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

# table number -> (scheme, quantity)
TABLE_META = {
    1: ("scheme1", "coverage"),
    2: ("scheme1", "length"),
    3: ("scheme2", "coverage"),
    4: ("scheme2", "length"),
}

# model strings in the reference-table column order
TABLE_MODELS = ("frechet:a=1", "burr:a=0.5,b=1", "burr:a=1,b=0.5")

# reproduction tolerances: absolute for coverage, relative for lengths
COVERAGE_TOL = 0.015
LENGTH_RTOL = 0.03


@dataclass(frozen=True)
class ReferenceValue:
    table: int
    model: str
    k: int
    method: str
    value: float


def load_reference() -> dict[tuple[int, str, int, str], float]:
    """All bundled values keyed by (table, model, k, method)."""
    out = {}
    path = resources.files("blocktail.data").joinpath("reference_tables.csv")
    with path.open("r", newline="") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(rows)
        for row in reader:
            key = (int(row["table"]), row["model"], int(row["k"]), row["method"])
            out[key] = float(row["value"])
    return out


def reference_k_grid() -> tuple[int, ...]:
    ks = sorted({k for (_, _, k, _) in load_reference()})
    return tuple(ks)
