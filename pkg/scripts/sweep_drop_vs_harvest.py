#!/usr/bin/env python3
"""Drop probability across harvest rates, for every protocol and policy kind.

Reproduces the drop-versus-harvest sweep on the reference link geometry:
one CSV row per (protocol, policy kind, harvest probability), with optimal
and myopic policies side by side and infeasible points reported as full
loss (drop probability one).
"""

import argparse
from pathlib import Path

from eharq.config import load_config
from eharq.experiments import STATUS_OK, run_sweep_rho


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", metavar="PATH", help="key = value config file")
    parser.add_argument("--tth", type=float, help="throughput floor (default 0.2)")
    parser.add_argument("--workers", type=int, help="parallel sweep workers")
    parser.add_argument("--out", default="results/drop_vs_harvest.csv")
    args = parser.parse_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    config = load_config(
        args.config, {"tth": args.tth, "workers": args.workers, "out": args.out}
    )
    rows = run_sweep_rho(config)
    feasible = sum(row["status"] == STATUS_OK for row in rows)
    print(f"wrote {len(rows)} rows ({feasible} feasible) to {args.out}")


if __name__ == "__main__":
    main()
