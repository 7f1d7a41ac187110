"""Command line entry point: figs render --kind phase --in phase.csv --out phase.png"""

from __future__ import annotations

import argparse
import json
import sys

from .render import FigureRequest, SchemaError, render

KIND_ALIASES = {
    "phase": "PhaseDiagram",
    "rate": "RatePlot",
    "tails": "TailBars",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figs", description="Render figures from simulation CSV files")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("render", help="render one figure from a CSV file")
    p.add_argument("--kind", required=True, choices=sorted(KIND_ALIASES), help="figure kind")
    p.add_argument("--in", dest="input_csv", required=True, metavar="IN", help="input CSV path")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--title", default=None, help="figure title override")
    p.add_argument("--dpi", type=int, default=150)
    p.add_argument(
        "--theory",
        type=float,
        default=None,
        help="theoretical log-log slope to overlay on rate plots",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    styling = {"dpi": args.dpi}
    if args.title is not None:
        styling["title"] = args.title
    if args.theory is not None:
        styling["theory_exponent"] = args.theory
    request = FigureRequest(
        input_csv=args.input_csv,
        kind=KIND_ALIASES[args.kind],
        output_path=args.out,
        styling=styling,
    )
    try:
        summary = render(request)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, default=str))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
