"""Scan the kinetic Fokker-Planck friction grid and report where lambda_bar(2, t) >= e^{t*}/16 holds.

    python3 scripts/kfp_thresholds.py --out kfp.csv
"""

import argparse
import csv
import sys

from gramlab.asymptotics import KFP_LARGE_GRID, KFP_SMALL_GRID, T_STAR_GRID, kfp_lambda_bound, kfp_threshold_scan


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", help="CSV path (default stdout)")
    args = ap.parse_args(argv)

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["regime", "gamma", "t_star", "t", "lambda_bar", "bound", "verdict"])
    for regime, grid in (("large", KFP_LARGE_GRID), ("small", KFP_SMALL_GRID)):
        for g in grid:
            for ts in T_STAR_GRID:
                r = kfp_lambda_bound(g, ts, regime)
                w.writerow([regime, g, ts, r.instance["t"], repr(r.rhs), repr(r.lhs), r.verdict])
    if args.out:
        fh.close()
    for regime in ("large", "small"):
        scan = kfp_threshold_scan(regime)
        print(f"{regime}: empirical threshold gamma = {scan['threshold']}", file=sys.stderr)


if __name__ == "__main__":
    main()
