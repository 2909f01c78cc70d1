"""Command-line entry point.

    ohmicline <scenario> --config FILE [--out DIR] [--threads N]
                         [--chi N] [--dt X]

Exit codes: 0 success, 2 configuration error, 3 convergence failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import SCENARIOS, OhmicConfigError, parse_config
from .circuit import CutoffConvergenceError
from .experiments import ConvergenceFailure, run_scenario, write_record
from .propagate import KrylovConvergenceError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ohmicline",
        description="Ohmic spin-boson waveguide simulator")
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name, doc in (
            ("ground", "interacting ground-state profiles"),
            ("emit", "spontaneous emission after a quench"),
            ("scatter", "single-photon wavepacket scattering"),
            ("susceptibility", "stationary susceptibility versus coupling"),
            ("circuit", "flux-qubit coupling estimate")):
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", required=True,
                       help="key = value configuration file")
        p.add_argument("--out", help="output directory (overrides out_dir)")
        p.add_argument("--threads", type=int,
                       help="worker threads for independent runs")
        p.add_argument("--chi", type=int,
                       help="maximum bond dimension (overrides chi_max)")
        p.add_argument("--dt", type=float, help="time step override")
    return parser


def load_config(args: argparse.Namespace):
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as exc:
        raise OhmicConfigError(f"cannot read {args.config}: {exc}")
    config = parse_config(text)
    if config.scenario and config.scenario != args.scenario:
        raise OhmicConfigError(
            f"config sets scenario = {config.scenario}, but the "
            f"{args.scenario} subcommand was invoked")
    overrides = {"scenario": args.scenario}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.threads is not None:
        overrides["threads"] = args.threads
    if args.chi is not None:
        overrides["chi_max"] = args.chi
    if args.dt is not None:
        overrides["dt"] = args.dt
    return replace(config, **overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except OhmicConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        record = run_scenario(config)
    except (ConvergenceFailure, KrylovConvergenceError,
            CutoffConvergenceError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OhmicConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = write_record(record, config)
    print(f"wrote {out}")
    for key in sorted(record.scalars):
        print(f"  {key} = {record.scalars[key]:.6g}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
