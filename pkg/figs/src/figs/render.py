"""Render one figure family to SVG, deterministically.

Rendering is a pure function of the CSV bytes and the spec: the backend is
pinned, fonts and sizes are fixed, SVG element ids are salted with a
constant and the output carries no timestamp, so the same inputs always
produce the same bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from . import data  # noqa: E402
from .figspec import FigureSpec  # noqa: E402

__all__ = ["REQUIRED_COLUMNS", "render"]

REQUIRED_COLUMNS = {
    "convergence": ("t", "norm_cum_value"),
    "theta-trend": ("value", "theta_per_stage"),
    "learning-sensitivity": ("value", "stages_to_criterion"),
}

_Y_COLUMN = {
    "theta-trend": "theta_per_stage",
    "learning-sensitivity": "stages_to_criterion",
}

_Y_LABEL = {
    "convergence": "normalized cumulative value",
    "theta-trend": "dropped packets per stage (theta/T)",
    "learning-sensitivity": "stages to convergence criterion",
}

_RC = {
    "svg.hashsalt": "figs",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "font.size": 10.0,
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "path.simplify": False,
}


def _series_label(group_by: tuple[str, ...], key: tuple) -> str:
    return ", ".join(f"{col}={val}" for col, val in zip(group_by, key))


def render(spec: FigureSpec, out) -> Path:
    """Draw the spec's family from its input CSVs into ``out`` (SVG)."""
    required = REQUIRED_COLUMNS[spec.family] + spec.group_by
    rows = data.load_rows(spec.inputs, required)
    groups = data.group_rows(rows, spec.group_by)

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        try:
            if spec.family == "convergence":
                for key in sorted(groups):
                    xs, ys = data.curve(groups[key], "t", "norm_cum_value")
                    ax.plot(xs, ys, label=_series_label(spec.group_by, key))
                ax.set_xlabel("stage")
            else:
                y_col = _Y_COLUMN[spec.family]
                tick_labels: list[str] = []
                for key in sorted(groups):
                    labels, means, stds = data.series_stats(groups[key], "value", y_col)
                    for label in labels:
                        if label not in tick_labels:
                            tick_labels.append(label)
                    xs = [tick_labels.index(label) for label in labels]
                    ax.errorbar(
                        xs,
                        means,
                        yerr=stds,
                        marker="o",
                        capsize=3.0,
                        label=_series_label(spec.group_by, key),
                    )
                ax.set_xticks(range(len(tick_labels)), tick_labels)
                params = sorted({row["param"] for row in rows}) if rows and "param" in rows[0] else []
                ax.set_xlabel(" / ".join(params) if params else "value")
            ax.set_ylabel(_Y_LABEL[spec.family])
            if spec.title:
                ax.set_title(spec.title)
            if any(_series_label(spec.group_by, key) for key in groups):
                ax.legend()
            fig.savefig(out, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    return out
