"""Grid-refinement study for the occupation-measure LP on the pendulum.

Solves alpha at a few classes on a sequence of refined grids and prints the
error against the closed-form oracle, plus the flat-segment endpoints of a
coarse scan at each resolution.

    python scripts/resolution_study.py --levels 3 --out study.csv
"""
import argparse
import csv

import numpy as np

from wkam import MeasureGrid, PendulumOracle, SystemSpec, solve_alpha
from wkam.convex import flat_segments
from wkam.pipeline import alpha_profile, uniform
from wkam.measure_lp import scan_alpha


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, default=3, help="number of refinements starting at nx=32")
    ap.add_argument("--classes", type=float, nargs="+", default=[0.0, 1.5, 2.0, 3.0])
    ap.add_argument("--scan-count", type=int, default=61)
    ap.add_argument("--out", default=None, help="optional CSV output")
    args = ap.parse_args(argv)

    sys = SystemSpec.pendulum()
    o = PendulumOracle()
    grid = MeasureGrid(nx=32, nv=33, vmax=4.0)
    rows = []
    for _ in range(args.levels):
        for c in args.classes:
            r = solve_alpha(sys, grid, c)
            rows.append([grid.nx, grid.nv, c, r.alpha, o.alpha(c), r.alpha - o.alpha(c), r.rotation[0]])
        scan = scan_alpha(sys, grid, [float(c) for c in uniform(-3, 3, args.scan_count)])
        segs = [s for s in flat_segments(alpha_profile(scan)) if s.is_constant]
        ends = [(s.t0, s.t1) for s in segs]
        print(f"nx={grid.nx:4d} nv={grid.nv:4d} flat segment {ends} (c* = {o.c_star:.6f})")
        grid = grid.refine()
    print(f"{'nx':>5} {'nv':>5} {'c':>6} {'alpha_lp':>12} {'alpha_oracle':>12} {'error':>10} {'rotation':>9}")
    for r in rows:
        print(f"{r[0]:5d} {r[1]:5d} {r[2]:6.2f} {r[3]:12.8f} {r[4]:12.8f} {r[5]:10.2e} {r[6]:9.5f}")
    if args.out:
        with open(args.out, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["nx", "nv", "c", "alpha_lp", "alpha_oracle", "error", "rotation"])
            w.writerows(rows)


if __name__ == "__main__":
    main()
