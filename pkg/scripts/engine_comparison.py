"""Compare the three alpha estimators (LP, Lax-Oleinik, Mañé cycles) with the oracle.

    python scripts/engine_comparison.py --nx 128 --classes 0 1 1.5 2 2.5
"""
import argparse
import time

import numpy as np

from wkam import ManeParams, MeasureGrid, PendulumOracle, SemigroupConfig, SystemSpec, solve_alpha, weak_kam_fixed_point
from wkam.mane import critical_value_probe


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=128)
    ap.add_argument("--nv", type=int, default=65)
    ap.add_argument("--classes", type=float, nargs="+", default=[0.0, 1.0, 1.5, 2.0, 2.5])
    args = ap.parse_args(argv)

    sys = SystemSpec.pendulum()
    o = PendulumOracle()
    grid = MeasureGrid(nx=args.nx, nv=args.nv)
    sg = SemigroupConfig()
    mp = ManeParams(nx=args.nx)
    print(f"{'c':>6} {'oracle':>11} {'LP':>11} {'Lax-Oleinik':>12} {'Mane':>11}   seconds (LP/LO/Mane)")
    for c in args.classes:
        t0 = time.perf_counter()
        a_lp = solve_alpha(sys, grid, c).alpha
        t1 = time.perf_counter()
        _, a_lo = weak_kam_fixed_point(sys, c, sg, np.zeros(args.nx))
        t2 = time.perf_counter()
        a_mn = critical_value_probe(sys, c, mp)
        t3 = time.perf_counter()
        print(f"{c:6.2f} {o.alpha(c):11.7f} {a_lp:11.7f} {a_lo:12.7f} {a_mn:11.7f}   {t1 - t0:.2f}/{t2 - t1:.2f}/{t3 - t2:.2f}")


if __name__ == "__main__":
    main()
