"""Run every shipped benchmark config and print the two ARMSE tables.

Usage:  python scripts/run_all_benchmarks.py [--jobs N] [--out DIR] [--trials N]

With --trials you can dial the full N=100 benchmark down for a quick look.
"""

import argparse
from dataclasses import replace
from pathlib import Path

from sptrack.config import load_config
from sptrack.experiment import run_experiment

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
SCENARIOS = ("s1", "s2", "s3", "s4")
TRACKERS = ("windowed-gp", "trend-only", "trend-gp", "trend-stp")


def run_table(kind: str, jobs: int, out_root, trials):
    suffix = "gp" if kind == "gp" else "heavy"
    table = {}
    for scenario in SCENARIOS:
        config = load_config(CONFIG_DIR / f"{scenario}_{suffix}.json")
        if trials is not None:
            config = replace(config, trials=trials)
        out_dir = None if out_root is None else Path(out_root) / f"{scenario}_{suffix}"
        summary = run_experiment(config, jobs=jobs, out_dir=out_dir, quiet=True)
        table[scenario.upper()] = {r.name: r.armse for r in summary.results}
        print(f"done: {scenario}_{suffix}")
    return table


def print_table(title: str, table: dict):
    print(f"\nARMSE [m] — {title}")
    header = f"{'tracker':<14}" + "".join(f"{s:>12}" for s in table)
    print(header)
    for name in TRACKERS:
        row = f"{name:<14}" + "".join(f"{table[s][name]:>12.4f}" for s in table)
        print(row)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--out", default=None)
    parser.add_argument("--trials", type=int, default=None)
    args = parser.parse_args()

    gp_table = run_table("gp", args.jobs, args.out, args.trials)
    heavy_table = run_table("heavy", args.jobs, args.out, args.trials)
    print_table("GP colored measurement noise", gp_table)
    print_table("heavy-tailed colored measurement noise", heavy_table)


if __name__ == "__main__":
    main()
