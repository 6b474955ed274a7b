"""Command-line interface: render figures from exported CSVs."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .csvtable import FigureError
from .figures import FIGURE_KINDS, FigureSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netcredit-plots",
        description="Render figures from netcredit CSV exports",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    ren = sub.add_parser("render", help="render one figure")
    ren.add_argument("--kind", choices=FIGURE_KINDS, required=True)
    ren.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True,
                     help="input CSVs (network needs the edge CSV then the trajectory CSV)")
    ren.add_argument("--out", type=Path, required=True,
                     help="output image; vector format (.svg) when no extension given")
    ren.add_argument("--t", type=int, default=15, help="step selector")
    ren.add_argument("--times", default="1,5,15",
                     help="comma list of steps for the estimation overlay")
    ren.add_argument("--estimator", default=None, help="estimator tag filter (summary CSVs)")
    ren.add_argument("--replication", type=int, default=0)
    ren.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        spec = FigureSpec(
            kind=args.kind,
            inputs=list(args.inputs),
            output=args.out,
            t=args.t,
            times=tuple(int(part) for part in str(args.times).split(",") if part.strip()),
            estimator=args.estimator,
            replication=args.replication,
            dpi=args.dpi,
        )
        path = render(spec)
    except FigureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
