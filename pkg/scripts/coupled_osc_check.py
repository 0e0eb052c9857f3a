"""Coupled oscillators: compare lambda_bar(j, t) with t sin^2(pi/(j+1)) - c_j.

Also prints the large-t slope lambda_bar(j, t)/t against sin^2(pi/(j+1)) and
against (2/(j+1)) sin^2(pi/(j+1)), the squared first component of the
slowest normalised eigenvector.
"""

import argparse
import math

from gramlab.asymptotics import coupled_osc_bound
from gramlab.gramian import lambda_min
from gramlab.model import ZooId, zoo_build


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--jmax", type=int, default=8)
    ap.add_argument("--t", default="1,10,100,1000")
    args = ap.parse_args(argv)
    times = [float(t) for t in args.t.split(",")]

    print(f"{'j':>3} {'t':>7} {'lambda_bar':>12} {'bound':>12} {'corrected':>12}  verdicts")
    for j in range(2, args.jmax + 1):
        for t in times:
            plain = coupled_osc_bound(j, t)
            fixed = coupled_osc_bound(j, t, corrected=True)
            print(f"{j:3d} {t:7g} {plain.rhs:12.5g} {plain.lhs:12.5g} {fixed.lhs:12.5g}  "
                  f"{plain.verdict}/{fixed.verdict}")
    print("\nlarge-t slope lambda_bar(j, t)/t at t = 1e5")
    for j in range(2, args.jmax + 1):
        s2 = math.sin(math.pi / (j + 1)) ** 2
        slope = lambda_min(zoo_build(ZooId("coupled-osc", j=j)), 1e5) / 1e5
        print(f"  j={j}: slope={slope:.6f}  sin^2={s2:.6f}  (2/(j+1)) sin^2={2 * s2 / (j + 1):.6f}")


if __name__ == "__main__":
    main()
