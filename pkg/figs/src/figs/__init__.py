"""Deterministic figure rendering for the simulator's CSV outputs."""

from .figspec import FAMILIES, FigureSpec
from .render import render

__all__ = ["FAMILIES", "FigureSpec", "render"]
