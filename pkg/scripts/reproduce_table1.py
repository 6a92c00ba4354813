"""Median MSE of the L2 and T-Robust smoothers on the linear sinusoid, all ten contamination settings.

    python3 scripts/reproduce_table1.py --runs 200 --seed 0 --out table1.csv
"""
import argparse
import sys
from pathlib import Path

from tksmooth.datafile import records_to_csv
from tksmooth.experiments import TABLE1_ROWS, ExperimentSpec, run_table1, summary_records


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", type=Path, default=None)
    args = ap.parse_args(argv)

    records = []
    print(f"{'scheme':<22}{'L2 median':>12}{'T-Robust median':>18}   (runs={args.runs}, seed={args.seed})")
    for scheme in TABLE1_ROWS:
        summary = run_table1(ExperimentSpec("table1", runs=args.runs, master_seed=args.seed, scheme=scheme),
                             workers=args.workers)
        records.extend(summary_records(summary))
        label = scheme.kind if scheme.kind == "nominal" else f"{scheme.kind} p={scheme.p:g}" + (
            f" phi={scheme.phi:g}" if scheme.kind == "normal" else "")
        print(f"{label:<22}{summary.median('l2'):>12.4f}{summary.median('trobust'):>18.4f}", flush=True)
    if args.out:
        args.out.write_text(records_to_csv(records))
    return 0


if __name__ == "__main__":
    sys.exit(main())
