"""Command-line experiment runner.

    sptrack run --config configs/s1_gp.json [--jobs N] [--seed S] [--out DIR]
    sptrack validate --config configs/s1_gp.json
    sptrack scenarios list
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import load_config, validate_config
from .exceptions import ConfigError
from .experiment import run_experiment
from .sim import DEFAULT_SCENARIOS, scenario_to_dict


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sptrack",
        description="Monte-Carlo tracking benchmarks: trend + stochastic-process trackers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark experiment")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--jobs", type=int, default=1, help="parallel trial workers")
    run.add_argument("--seed", type=int, default=None, help="override base_seed")
    run.add_argument("--out", default=None, help="output directory for CSV files")

    val = sub.add_parser("validate", help="check a config file")
    val.add_argument("--config", required=True)

    scen = sub.add_parser("scenarios", help="scenario registry")
    scen.add_argument("action", choices=["list"])
    return parser


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return 2
    try:
        run_experiment(config, jobs=args.jobs, out_dir=args.out)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc}", file=sys.stderr)
        return 1
    return 0


def _cmd_validate(args) -> int:
    diagnostics = validate_config(args.config)
    if diagnostics:
        for line in diagnostics:
            print(f"invalid: {line}")
        return 1
    print("ok")
    return 0


def _cmd_scenarios(_args) -> int:
    for name, spec in DEFAULT_SCENARIOS.items():
        fields = scenario_to_dict(spec)
        kind = fields.pop("type")
        fields.pop("name")
        detail = ", ".join(f"{k}={v}" for k, v in fields.items())
        print(f"{name}  [{kind}]  {detail}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "validate":
        return _cmd_validate(args)
    return _cmd_scenarios(args)


if __name__ == "__main__":
    sys.exit(main())
