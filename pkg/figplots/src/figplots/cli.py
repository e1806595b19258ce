"""Command line: ``figplots <figure> --in <csv> --out <path> --format png|svg``."""

from __future__ import annotations

import argparse
import sys

from .render import FIGURES, FORMATS, FigureRequest, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figplots",
        description="Render experiment metrics CSVs into the standard figures")
    parser.add_argument("figure", choices=FIGURES)
    parser.add_argument("--in", dest="input_csv", required=True,
                        help="metrics CSV produced by the experiment harness")
    parser.add_argument("--out", dest="output_path", required=True,
                        help="image output path; the slopes sidecar is written next to it")
    parser.add_argument("--format", choices=FORMATS, default="png")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    request = FigureRequest(figure=args.figure, input_csv=args.input_csv,
                            output_path=args.output_path, format=args.format)
    try:
        sidecar = render(request)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output_path} and {args.output_path}.slopes.json "
          f"({sidecar['rows_used']} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
