"""Command line: regretplot plot --out fig.png --panel name:a.csv,b.csv ..."""

from __future__ import annotations

import argparse
import sys

from .render import Panel, SchemaError, render


def parse_panel(arg: str) -> Panel:
    name, sep, paths = arg.partition(":")
    if not sep or not name or not paths:
        raise argparse.ArgumentTypeError(
            f"expected <scenario>:<csv>[,<csv>...], got {arg!r}")
    return Panel(name, tuple(p for p in paths.split(",") if p))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="regretplot",
        description="Render regret-curve CSVs as panel figures with "
                    "standard-error bands.")
    sub = parser.add_subparsers(dest="command", required=True)
    plot = sub.add_parser("plot", help="render one figure")
    plot.add_argument("--out", required=True, help="output image path")
    plot.add_argument("--panel", required=True, action="append",
                      type=parse_panel, metavar="NAME:CSV[,CSV...]",
                      help="one panel; repeat for more panels")
    plot.add_argument("--dpi", type=int, default=100)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        render(args.panel, args.out, dpi=args.dpi)
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
