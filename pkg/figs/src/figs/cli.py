"""Command line entry point: ``figs render --spec <json> --out <path>``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figspec import FigureSpec
from .render import render

__all__ = ["build_parser", "main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figs", description="Render simulation result CSVs to SVG figures."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    render_p = sub.add_parser("render", help="render one figure from a JSON spec")
    render_p.add_argument("--spec", required=True, help="path to the figure spec JSON")
    render_p.add_argument(
        "--out", default=None, help="output SVG path (overrides the spec's own)"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec_path = Path(args.spec)
    if not spec_path.exists():
        raise SystemExit(f"figure spec not found: {spec_path}")
    try:
        spec = FigureSpec.from_json(spec_path.read_text())
        out = args.out if args.out is not None else spec.out
        if out is None:
            raise ValueError("no output path: pass --out or set \"out\" in the spec")
        path = render(spec, out)
    except ValueError as exc:
        raise SystemExit(str(exc)) from exc
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
