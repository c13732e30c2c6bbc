"""CSV loading, grouping and the mean/stddev reductions the figures need."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["load_rows", "group_rows", "curve", "series_stats"]


def load_rows(paths, required: tuple[str, ...]) -> list[dict]:
    """Read and concatenate CSV rows, insisting on the required columns.

    Missing columns are reported by name per file; a file without any data
    rows (or without even a header) is a "no data" failure.
    """
    rows: list[dict] = []
    for raw in paths:
        path = Path(raw)
        if not path.exists():
            raise ValueError(f"input CSV not found: {path}")
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ValueError(f"no data: {path} is empty")
            missing = sorted(set(required) - set(reader.fieldnames))
            if missing:
                raise ValueError(f"{path} is missing columns: {', '.join(missing)}")
            file_rows = list(reader)
        if not file_rows:
            raise ValueError(f"no data: {path} has no rows")
        rows.extend(file_rows)
    return rows


def group_rows(rows: list[dict], keys: tuple[str, ...]) -> dict[tuple, list[dict]]:
    """Split rows into one bucket per distinct combination of key columns."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    return groups


def _ordered_unique(values: list[str]) -> list[str]:
    """Distinct values, numerically sorted when they all parse as numbers,
    else in first-appearance order."""
    seen = list(dict.fromkeys(values))
    try:
        return sorted(seen, key=float)
    except ValueError:
        return seen


def curve(rows: list[dict], x_col: str, y_col: str) -> tuple[np.ndarray, np.ndarray]:
    """(x, y) polyline: one point per distinct x (first row wins), x-sorted."""
    first: dict[float, float] = {}
    for row in rows:
        x = float(row[x_col])
        if x not in first:
            first[x] = float(row[y_col])
    xs = np.array(sorted(first))
    return xs, np.array([first[x] for x in xs])


def series_stats(
    rows: list[dict], x_col: str, y_col: str
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Per-x mean and sample stddev of y across rows (the seed axis).

    Returns the distinct x values as labels (numeric order when possible)
    plus parallel mean/std arrays; std is 0 for singleton groups.
    """
    labels = _ordered_unique([row[x_col] for row in rows])
    means = np.empty(len(labels))
    stds = np.empty(len(labels))
    for i, label in enumerate(labels):
        ys = np.array([float(r[y_col]) for r in rows if r[x_col] == label])
        means[i] = ys.mean()
        stds[i] = ys.std(ddof=1) if ys.size > 1 else 0.0
    return labels, means, stds
