"""Minimal CSV-to-column loading with header validation."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np


class FigureError(ValueError):
    """Inputs cannot produce the requested figure."""


def load_table(path) -> dict[str, np.ndarray]:
    """Read a CSV into {column: float array}; non-numeric columns are kept
    as object arrays."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise FigureError(f"{path}: empty CSV") from None
        rows = [row for row in reader if row]
    if not rows:
        raise FigureError(f"{path}: no data rows")
    columns: dict[str, np.ndarray] = {}
    for idx, name in enumerate(header):
        values = [row[idx] for row in rows]
        try:
            columns[name] = np.array([float(v) for v in values])
        except ValueError:
            columns[name] = np.array(values, dtype=object)
    return columns


def require_columns(table: dict[str, np.ndarray], names, path) -> None:
    for name in names:
        if name not in table:
            raise FigureError(f"{path}: missing column {name!r}")
