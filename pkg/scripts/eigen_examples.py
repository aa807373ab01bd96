"""Smallest Stokes eigenvalues on two refinement families.

``square``: unit square with the 4x4 diagonal grid, levels 0..4.
``hexagon``: the once-refined hexagon, levels 0..4 (hexagon levels 1..5).

Usage: python3 scripts/eigen_examples.py [--family square|hexagon|both] [--pair sbdfm-p1|el-p0]
"""
import argparse

import numpy as np

from consfem.experiments import eigen_study, richardson_rates
from consfem.mesh import appendix_hexagon, square_diagonal_example, uniform_refine

REFERENCE = {
    "square": [[66.4097, 55.5965, 53.1347, 52.5407, 52.3936],
               [123.5251, 99.7536, 94.0682, 92.6136, 92.2471],
               [137.3504, 104.5997, 95.1729, 92.8802, 92.3129],
               [165.0641, 145.8915, 132.8618, 129.3819, 128.5035],
               [201.2460, 181.6767, 161.1576, 155.8845, 154.5653],
               [203.7052, 196.9708, 174.6248, 168.9307, 167.5051]],
    "hexagon": [[86.6443, 83.3799, 81.4757, 80.9330, 80.7931],
                [137.7299, 113.2535, 105.8261, 103.8102, 103.2968],
                [186.2746, 177.2660, 157.0575, 151.3276, 149.9012],
                [219.7048, 179.7712, 171.8289, 170.2635, 169.8594],
                [225.8015, 216.8896, 204.0614, 199.9510, 198.8708],
                [247.3904, 269.6167, 223.8862, 211.9163, 208.9613]],
}


def run(family, pair, levels):
    base = square_diagonal_example() if family == "square" else uniform_refine(appendix_hexagon())
    res = eigen_study(base, levels, pair, k=6)
    vals = np.array([[row[f"lambda{j}"] for j in range(1, 7)] for row in res.rows])
    ref = np.array(REFERENCE[family]).T[:len(vals)]
    print(f"\n{family} ({pair})")
    print("level " + " ".join(f"{'lambda' + str(j):>10}" for j in range(1, 7)) + "   max rel. dev.  trend")
    for row, v, r in zip(res.rows, vals, ref):
        dev = np.max(np.abs(v - r) / r)
        print(f"{row['level']:5d} " + " ".join(f"{x:10.4f}" for x in v) + f"   {dev:12.2e}  {row['trend']}")
    if len(vals) >= 3:
        print("Richardson rates (finest triple): "
              + " ".join(f"{x:.2f}" for x in richardson_rates(vals)[-1]))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--family", choices=["square", "hexagon", "both"], default="both")
    ap.add_argument("--pair", choices=["sbdfm-p1", "el-p0"], default="sbdfm-p1")
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()
    for fam in (["square", "hexagon"] if args.family == "both" else [args.family]):
        run(fam, args.pair, args.levels)


if __name__ == "__main__":
    main()
