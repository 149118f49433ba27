"""Run the one-trait-at-a-time validation sweep and print the trend report.

    python scripts/reproduce_sweep.py --runs-per-cell 100 --noise 0 0.1 0.2 --out sweep_out
"""

import argparse
import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from bigfive_abm.core import TRAIT_CODES
from bigfive_abm.io import write_csv, write_json
from bigfive_abm.sweep import SWEEP_COLUMNS, SweepConfig, check_trends, run_sweep, sweep_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--runs-per-cell", type=int, default=50)
    ap.add_argument("--noise", type=float, nargs="+", default=[0.0, 0.2])
    ap.add_argument("--team-size", type=int, default=6)
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--jobs", type=int, default=os.cpu_count())
    ap.add_argument("--out", type=Path, default=Path("sweep_out"))
    args = ap.parse_args()

    tables = {}
    with ProcessPoolExecutor(args.jobs) as ex:
        for code in TRAIT_CODES:
            cfg = SweepConfig(code, runs_per_cell=args.runs_per_cell, team_size=args.team_size,
                              noise_levels=tuple(args.noise), seed=args.seed)
            tables[code] = run_sweep(cfg, ex)
            print(f"swept {code}", flush=True)

    report = check_trends(tables)
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(args.out / "sweep.csv", SWEEP_COLUMNS, [r for c in TRAIT_CODES for r in sweep_rows(tables[c])])
    write_json(args.out / "trends.json", report)
    for t in report:
        print(f"trend {t['trend_id']}: {'PASS' if t['pass'] else 'FAIL'}  {t['description']}")
        print(f"    {json.dumps(t['observed_statistic'])}")


if __name__ == "__main__":
    main()
