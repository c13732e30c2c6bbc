"""Figure specification: which family, which CSVs, how to group series.

A spec is a small JSON object::

    {
      "family": "convergence" | "theta-trend" | "learning-sensitivity",
      "inputs": ["runs/M=2/run_000.csv", "runs/M=3/run_000.csv"],
      "group_by": ["mode"],          # optional; family default when omitted
      "out": "convergence.svg",      # optional; the CLI --out overrides it
      "title": "..."                 # optional
    }

``family`` picks the columns that must be present in every input and what
gets plotted; ``group_by`` names the columns whose distinct value
combinations become one series each (may be empty for a single series).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

__all__ = ["FAMILIES", "DEFAULT_GROUPS", "FigureSpec"]

FAMILIES = ("convergence", "theta-trend", "learning-sensitivity")

DEFAULT_GROUPS = {
    "convergence": ("mode",),
    "theta-trend": ("param",),
    "learning-sensitivity": ("param",),
}


@dataclass(frozen=True)
class FigureSpec:
    family: str
    inputs: tuple[str, ...]
    group_by: tuple[str, ...]
    out: str | None = None
    title: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "FigureSpec":
        if not isinstance(data, dict):
            raise ValueError("figure spec must be a JSON object")
        known = {"family", "inputs", "group_by", "out", "title"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown figure spec keys: {', '.join(unknown)}")

        family = data.get("family")
        if family not in FAMILIES:
            raise ValueError(
                f"family must be one of {', '.join(FAMILIES)}; got {family!r}"
            )

        inputs = data.get("inputs")
        if (
            not isinstance(inputs, (list, tuple))
            or not inputs
            or not all(isinstance(p, str) and p for p in inputs)
        ):
            raise ValueError("inputs must be a non-empty list of CSV paths")

        group_by = data.get("group_by", DEFAULT_GROUPS[family])
        if not isinstance(group_by, (list, tuple)) or not all(
            isinstance(c, str) and c for c in group_by
        ):
            raise ValueError("group_by must be a list of column names")

        for field in ("out", "title"):
            if data.get(field) is not None and not isinstance(data[field], str):
                raise ValueError(f"{field} must be a string when present")

        return cls(
            family=family,
            inputs=tuple(inputs),
            group_by=tuple(group_by),
            out=data.get("out"),
            title=data.get("title"),
        )

    @classmethod
    def from_json(cls, text: str) -> "FigureSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as err:
            raise ValueError(f"figure spec is not valid JSON: {err}") from err
        return cls.from_dict(data)

    def to_json(self) -> str:
        data = {"family": self.family, "inputs": list(self.inputs), "group_by": list(self.group_by)}
        if self.out is not None:
            data["out"] = self.out
        if self.title is not None:
            data["title"] = self.title
        return json.dumps(data, sort_keys=True, indent=2)
