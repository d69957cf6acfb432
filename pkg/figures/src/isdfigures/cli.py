"""Command line: isdsim-figures <kind> --input a.csv [--input b.csv] --out fig.png"""

from __future__ import annotations

import argparse
import sys

from .csvio import MissingColumn
from .render import KINDS, FigureSpec, render


def build_parser():
    ap = argparse.ArgumentParser(prog="isdsim-figures")
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--input", action="append", required=True, help="input CSV (repeatable)")
    ap.add_argument("--out", required=True, help="output image path")
    ap.add_argument("--label", action="append", default=[], help="legend label per input")
    ap.add_argument("--title", default="")
    ap.add_argument("--linear-y", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(
        kind=args.kind,
        inputs=args.input,
        output=args.out,
        labels=args.label,
        title=args.title,
        logy=not args.linear_y,
    )
    try:
        print(render(spec))
    except MissingColumn as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
