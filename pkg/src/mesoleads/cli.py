"""Command-line entry point.

One subcommand per scenario; every run writes a CSV (or check report) plus a
manifest with all resolved parameters into the output directory.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 acceptance-check failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .dynamics import PhysicalityError, SteadyStateError
from .scenarios import (
    SCENARIOS,
    ConfigError,
    SimulationError,
    resolve_params,
    run_scenario,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mesoleads",
        description="Mesoscopic-leads covariance simulator and entropy-production accounting",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for scenario in SCENARIOS:
        p = sub.add_parser(scenario, help=f"run the {scenario} scenario")
        p.add_argument("--config", help="JSON config overriding the built-in defaults")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--dt", type=float, help="integrator step (inverse energy units)")
        p.add_argument("--tmax", type=float, help="final time (inverse energy units)")
        p.add_argument("--threads", type=int, help="parallel sweep workers")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"dt": args.dt, "t_max": args.tmax, "threads": args.threads}
    try:
        params = resolve_params(args.scenario, args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    try:
        result = run_scenario(args.scenario, params, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (
        PhysicalityError,
        SteadyStateError,
        SimulationError,
        ArithmeticError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    if result.failures:
        for line in result.failures:
            print(f"failed: {line}", file=sys.stderr)
        return 3 if args.scenario == "oracle-check" else 2
    print(f"wrote {result.csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
