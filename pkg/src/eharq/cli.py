"""Command-line front end: solve, simulate, sweep-rho, sweep-tth, verify.

Exit codes: 0 success, 1 verification check failure, 2 throughput floor
infeasible, 3 numerical failure (singular chain, simplex trouble,
iteration limit), 4 bad configuration or usage.
"""

from __future__ import annotations

import argparse
import sys

from eharq.chain import MultipleRecurrentClasses
from eharq.config import ConfigError, load_config
from eharq.experiments import (
    EXIT_BAD_CONFIG,
    EXIT_NUMERICAL,
    RHO_SWEEP_COLUMNS,
    TTH_SWEEP_COLUMNS,
    csv_text,
    format_value,
    run_simulate,
    run_solve,
    run_sweep_rho,
    run_sweep_tth,
)
from eharq.linalg import NumericalTrouble, SingularSystem

__all__ = ["main", "entry_point"]


class _Parser(argparse.ArgumentParser):
    # Route usage errors through the bad-config exit code instead of
    # argparse's default SystemExit(2), which EXIT_INFEASIBLE already uses.
    def error(self, message):
        raise ConfigError(message)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value config file")
    common.add_argument("--protocol", choices=["wo", "na", "adaptive"])
    common.add_argument("--rho", type=float, help="harvest probability per slot")
    common.add_argument("--tth", type=float, help="throughput floor")
    common.add_argument("--ef", type=int, help="feedback energy cost in quanta")
    common.add_argument("--k", type=int, help="transmission attempts per packet")
    common.add_argument("--seed", type=int)
    common.add_argument("--horizon", type=int, help="slots per simulation run")
    common.add_argument("--reps", type=int, help="independent simulation runs")
    common.add_argument("--imax", type=int, help="Dinkelbach iteration cap")
    common.add_argument("--delta", type=float, help="Dinkelbach stopping tolerance")
    common.add_argument("--out", metavar="PATH", help="output file (JSON or CSV)")
    common.add_argument("--workers", type=int, help="parallel sweep workers")
    return common


def build_parser() -> _Parser:
    parser = _Parser(
        prog="eharq",
        description=(
            "Optimal reception policies for an energy-harvesting ARQ receiver: "
            "LP-based policy synthesis, Monte Carlo validation, and sweeps."
        ),
    )
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve one instance")
    simulate = sub.add_parser(
        "simulate", parents=[common], help="simulate a policy and compare analytics"
    )
    simulate.add_argument("--policy-kind", choices=["myopic", "optimal"])
    simulate.add_argument("--policy-file", metavar="PATH", help="JSON policy rows")
    sub.add_parser(
        "sweep-rho", parents=[common], help="drop probability across a harvest-rate grid"
    )
    sub.add_parser(
        "sweep-tth", parents=[common], help="success probability across throughput floors"
    )
    verify = sub.add_parser("verify", help="run the built-in validation checks")
    verify.add_argument("--out", metavar="PATH", help="JSON summary path")
    return parser


_RENAMED_FLAGS = {
    "ef": "cost_feedback",
    "k": "max_attempts",
    "reps": "n_reps",
    "imax": "i_max",
}
_DIRECT_FLAGS = (
    "protocol",
    "rho",
    "tth",
    "seed",
    "horizon",
    "delta",
    "out",
    "workers",
    "policy_kind",
    "policy_file",
)


def _config_from_args(args: argparse.Namespace):
    overrides = {}
    for flag in _DIRECT_FLAGS:
        if getattr(args, flag, None) is not None:
            overrides[flag] = getattr(args, flag)
    for flag, field in _RENAMED_FLAGS.items():
        if getattr(args, flag, None) is not None:
            overrides[field] = getattr(args, flag)
    if args.command == "sweep-tth" and args.ef is not None:
        # A single --ef pins the sweep to that one feedback cost.
        overrides["ef_grid"] = (args.ef,)
    return load_config(args.config, overrides)


def _print_record(record: dict, skip: tuple[str, ...] = ()) -> None:
    for key, value in record.items():
        if key in skip:
            continue
        if isinstance(value, list):
            value = ", ".join(format_value(item) for item in value)
        print(f"{key:12} {format_value(value)}")


def _cmd_solve(args: argparse.Namespace) -> int:
    record, code = run_solve(_config_from_args(args))
    _print_record(record, skip=("policy",))
    policy = record.get("policy")
    print(f"{'policy_rows':12} {len(policy) if policy else 0}")
    return code


def _cmd_simulate(args: argparse.Namespace) -> int:
    record, code = run_simulate(_config_from_args(args))
    _print_record(record, skip=("replications",))
    return code


def _cmd_sweep(args: argparse.Namespace, runner, columns) -> int:
    config = _config_from_args(args)
    rows = runner(config)
    if config.out:
        print(f"wrote {len(rows)} rows to {config.out}")
    else:
        sys.stdout.write(csv_text(columns, rows))
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    from eharq.verify import run_verify

    return run_verify(out=args.out)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "sweep-rho":
            return _cmd_sweep(args, run_sweep_rho, RHO_SWEEP_COLUMNS)
        if args.command == "sweep-tth":
            return _cmd_sweep(args, run_sweep_tth, TTH_SWEEP_COLUMNS)
        return _cmd_verify(args)
    except (MultipleRecurrentClasses, SingularSystem, NumericalTrouble) as exc:
        print(f"eharq: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # ConfigError and malformed inputs (policy files, JSON) land here.
        print(f"eharq: configuration error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except OSError as exc:
        print(f"eharq: i/o error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
