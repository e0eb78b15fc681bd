#!/usr/bin/env python3
"""STM versus number of users at several confidence levels.

Writes one long-format CSV per confidence level plus a combined file with
an extra alpha column. Placement, knowledge, and matching draws are paired
across sweep values, so per-seed curves are directly comparable.
"""

import argparse
import csv
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from semhetnet.config import ScenarioConfig, load_config
from semhetnet.harness import sweep


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", help="base scenario config JSON")
    parser.add_argument("--out", default="results/users", help="output directory")
    parser.add_argument("--seeds", type=int, default=20, help="seeds per point")
    parser.add_argument("--alphas", default="0.55,0.75,0.95")
    parser.add_argument("--values", default="40,80,120,160,200,240,280")
    args = parser.parse_args()

    base = load_config(args.config) if args.config else ScenarioConfig()
    base = base.replace(seeds=tuple(range(1, args.seeds + 1)))
    values = [int(v) for v in args.values.split(",")]
    os.makedirs(args.out, exist_ok=True)

    combined = []
    for alpha in (float(a) for a in args.alphas.split(",")):
        cfg = base.replace(alpha=alpha, scenario_id=f"users-alpha{alpha:g}")
        rows = sweep(cfg, "num_mus", values,
                     out_dir=os.path.join(args.out, f"alpha{alpha:g}"))
        for row in rows:
            combined.append({"alpha": alpha, **row})
        print(f"alpha={alpha:g}: {len(rows)} rows")

    path = os.path.join(args.out, "combined.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(combined[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(combined)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
