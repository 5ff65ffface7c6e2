"""Non-pendulum example: U(x) = cos(4 pi x) + 0.3 cos(2 pi x) with two unequal wells.

Runs the alpha scan and classification through the pipeline and prints the
flat segment, which the closed-form oracle predicts at +-c*.

    python scripts/double_well.py --nx 128 --out out_double_well
"""
import argparse

from wkam.config import config_from_dict
from wkam.pendulum import OracleSpec, PendulumOracle
from wkam.dynamics import SystemSpec
from wkam.pipeline import run_command


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nx", type=int, default=128)
    ap.add_argument("--nv", type=int, default=65)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    system = {"n": 1, "m": 1.0, "potential": {"cos": [[2, 1.0], [1, 0.3]]}}
    cfg = config_from_dict({"system": system, "grid": {"nx": args.nx, "nv": args.nv, "vmax": 5.0}})
    spec = SystemSpec.from_json(system)
    o = PendulumOracle(OracleSpec(spec.potential, spec.m))
    b = run_command("classify", cfg)
    print(f"oracle: max U = {o.max_u:.6f} at {o.argmax_u}, c* = {o.c_star:.6f}")
    for s in b.summary["segments"]:
        print(f"segment [{s['start']:.3f}, {s['end']:.3f}] slope {s['slope']:.2e} constant={s['constant']}")
    if args.out:
        for p in b.write(args.out):
            print(p)


if __name__ == "__main__":
    main()
