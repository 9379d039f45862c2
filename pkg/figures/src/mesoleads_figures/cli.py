"""Command-line figure renderer: one subcommand per figure kind.

Reads a scenario CSV and writes SVG + PNG next to it (or to --out).
Exit codes: 0 success, 1 bad input or schema mismatch.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .plots import SchemaError, plot_budget, plot_infidelity, plot_rates

_RENDERERS = {
    "infidelity": plot_infidelity,
    "rates": plot_rates,
    "budget": plot_budget,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mesoleads-figures",
        description="Render mesoleads scenario CSV files to static figures",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in _RENDERERS:
        p = sub.add_parser(kind, help=f"render a {kind} figure")
        p.add_argument("csv", help="scenario CSV file")
        p.add_argument(
            "--out",
            help="output path base (default: CSV path with the extension dropped)",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    csv_path = Path(args.csv)
    out_base = Path(args.out) if args.out else csv_path.with_suffix("")
    try:
        written = _RENDERERS[args.kind](csv_path, out_base)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
