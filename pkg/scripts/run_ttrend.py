"""T-Trend study: x2 RMSE of L2, T-Robust and T-Trend with and without a jump in the truth."""
import argparse
import sys

from tksmooth.experiments import ExperimentSpec, run_ttrend


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    print(f"{'case':<10}{'L2':>10}{'T-Robust':>10}{'T-Trend':>10}")
    for jump in (False, True):
        s = run_ttrend(ExperimentSpec("ttrend", runs=args.runs, master_seed=args.seed, jump=jump),
                       workers=args.workers)
        print(f"{'jump' if jump else 'no jump':<10}" + "".join(f"{s.median(k):>10.4f}"
                                                            for k in ("l2", "trobust", "ttrend")))
    return 0


if __name__ == "__main__":
    sys.exit(main())
