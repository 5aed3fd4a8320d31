"""Command line front end: hbl-plots render --in <dir> --out <dir>."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .render import FigureSpec, MissingColumnError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbl-plots", description="Render figures from hbl run artifacts."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render eigenvalue/loss figures")
    p.add_argument("--in", dest="input_dir", required=True)
    p.add_argument("--out", dest="output_dir", required=True)
    p.add_argument("--format", dest="fmt", default="svg", choices=["svg", "png"])
    p.add_argument(
        "--runs",
        default=None,
        help="comma-separated run ids (default: every run found)",
    )
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    runs = tuple(args.runs.split(",")) if args.runs else None
    spec = FigureSpec(
        input_dir=Path(args.input_dir),
        output_dir=Path(args.output_dir),
        fmt=args.fmt,
        runs=runs,
    )
    try:
        written = render(spec)
    except (FileNotFoundError, MissingColumnError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
