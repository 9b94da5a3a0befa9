"""First zero of det F versus detuning for several bath states (TCL breakdown times).

    python3 scripts/singularity_scan.py --t-max 8 > singular_times.csv
"""
import argparse
import warnings

import numpy as np

from jcmaster.errors import SingularMap
from jcmaster.generators import tcl_generator
from jcmaster.jc_exact import Fock, ModelParams, Thermal, Vacuum


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-max", type=float, default=8.0)
    ap.add_argument("--points", type=int, default=4001)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
    args = ap.parse_args()
    envs = {"vacuum": Vacuum(), "fock1": Fock(1), "thermal0.5": Thermal(0.5), "thermal2": Thermal(2.0)}
    grid = np.linspace(0, args.t_max, args.points)
    print("delta," + ",".join(envs))
    for delta in args.deltas:
        row = []
        for env in envs.values():
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SingularMap)
                gen = tcl_generator(env, ModelParams(1.0, delta), grid)
            row.append(f"{gen.singular_times[0]:.6f}" if gen.singular_times else "nan")
        print(f"{delta:g}," + ",".join(row))


if __name__ == "__main__":
    main()
