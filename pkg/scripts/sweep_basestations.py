#!/usr/bin/env python3
"""STM versus number of knowledge-enabled base stations for two values of
the mean matching coefficient."""

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
    parser.add_argument("--out", default="results/basestations")
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--taus", default="0.3,0.7")
    parser.add_argument("--values", default="4,7,10,13,16")
    args = parser.parse_args()

    base = load_config(args.config) if args.config else ScenarioConfig()
    base = base.replace(seeds=tuple(range(1, args.seeds + 1)))
    values = [int(v) for v in args.values.split(",")]
    os.makedirs(args.out, exist_ok=True)

    combined = []
    for tau in (float(t) for t in args.taus.split(",")):
        cfg = base.replace(tau=tau, scenario_id=f"bss-tau{tau:g}")
        rows = sweep(cfg, "num_bss", values, out_dir=os.path.join(args.out, f"tau{tau:g}"))
        for row in rows:
            combined.append({"tau": tau, **row})
        print(f"tau={tau:g}: {len(rows)} rows")

    path = os.path.join(args.out, "combined.csv")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(combined[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(combined)
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
