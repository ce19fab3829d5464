"""Command line front-end: ``antisync-plots render --fig fig2 --in
trajectory.csv --out fig2.png``."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURE_COLUMNS, FigureSpec, RenderError, render


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="antisync-plots",
        description="Render figure analogs from antisync CSV outputs")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from CSV input(s)")
    p.add_argument("--fig", required=True, choices=sorted(FIGURE_COLUMNS),
                   help="figure id")
    p.add_argument("--in", dest="inputs", action="append", required=True,
                   metavar="CSV", help="input CSV (repeatable, e.g. the two "
                   "temperature curves of fig5)")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--xlabel", help="x axis label override")
    p.add_argument("--ylabel", help="y axis label override")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    labels = {}
    if args.xlabel:
        labels["xlabel"] = args.xlabel
    if args.ylabel:
        labels["ylabel"] = args.ylabel
    try:
        spec = FigureSpec(inputs=tuple(args.inputs), figure=args.fig,
                          output=args.out, labels=labels)
        path = render(spec)
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
