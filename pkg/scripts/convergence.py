"""Stokes and biharmonic convergence on crisscross grids of the unit square.

Usage: python3 scripts/convergence.py [--levels 3]
"""
import argparse

from consfem.experiments import biharmonic_study, stokes_convergence
from consfem.mesh import square_crisscross


def show(title, res):
    print(f"\n{title}")
    print(",".join(res.columns))
    for row in res.rows:
        print(",".join(f"{row[c]:.6g}" for c in res.columns))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--levels", type=int, default=3)
    args = ap.parse_args()
    base = square_crisscross(2)
    for pair in ("el-p0", "sbdfm-p1"):
        for eps in (1.0, 1e-3):
            show(f"Stokes {pair}, epsilon={eps:g}",
                 stokes_convergence(base, args.levels, pair, eps))
    show("biharmonic", biharmonic_study(base, args.levels))


if __name__ == "__main__":
    main()
