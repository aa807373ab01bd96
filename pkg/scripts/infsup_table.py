"""Inf-sup constants of three velocity-pressure pairs on the refined hexagon.

Usage: python3 scripts/infsup_table.py [--levels 6]

The ``p1-p0`` column decays like h; the two conforming-divergence pairs stay
bounded away from zero.
"""
import argparse
import time

from consfem.experiments import infsup_study
from consfem.mesh import appendix_hexagon

# lambda_min_plus, rate and lambda_max of p1-p0 at levels 1..6
REFERENCE = [(0.2232, None, 1.3822), (0.1235, 0.8538, 1.4081), (0.0636, 0.9574, 1.4131),
             (0.0321, 0.9865, 1.4140), (0.0161, 0.9955, 1.4142), (0.0081, 0.9911, 1.4142)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=6)
    ap.add_argument("--pairs", nargs="+", default=["p1-p0", "el-p0", "sbdfm-p1"])
    args = ap.parse_args()
    base = appendix_hexagon()
    for pair in args.pairs:
        t0 = time.perf_counter()
        res = infsup_study(base, args.levels, pair, first=1)
        print(f"\n{pair}  ({time.perf_counter() - t0:.1f} s)")
        print(f"{'level':>5} {'h':>8} {'lambda_min+':>12} {'rate':>7} {'lambda_max':>10} {'zeros':>5}"
              + ("   reference" if pair == "p1-p0" else ""))
        for row in res.rows:
            line = (f"{row['level']:5d} {row['h']:8.4f} {row['lambda_min_plus']:12.6f} "
                    f"{row['rate']:7.4f} {row['lambda_max']:10.6f} {row['zero_modes']:5d}")
            if pair == "p1-p0" and row["level"] - 1 < len(REFERENCE):
                ref = REFERENCE[row["level"] - 1]
                line += f"   {ref[0]:.4f} {ref[1] or float('nan'):7.4f} {ref[2]:.4f}"
            print(line)


if __name__ == "__main__":
    main()
