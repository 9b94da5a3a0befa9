"""Windows of negative loss rate in the Lorentzian model as the width shrinks.

Negative TCL loss means the generator is not of Lindblad form there although
the map stays completely positive.

    python3 scripts/damped_sign_scan.py --widths 0.1 0.5 1 2 4
"""
import argparse

import numpy as np

from jcmaster.damped_model import Lorentzian, solve_G
from jcmaster.generators import tcl_damped


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--widths", type=float, nargs="+", default=[0.1, 0.25, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--t-max", type=float, default=10.0)
    ap.add_argument("--steps", type=int, default=2048)
    args = ap.parse_args()
    print("width,first_singular_time,negative_fraction,min_loss")
    for width in args.widths:
        gen = tcl_damped(solve_G(Lorentzian(1.0, width), args.t_max, args.steps))
        loss = gen.coeffs.loss
        finite = np.isfinite(loss)
        t_sing = gen.singular_times[0] if gen.singular_times else float("nan")
        print(f"{width:g},{t_sing:.6f},{np.mean(loss[finite] < 0):.4f},{np.nanmin(loss):.6g}")


if __name__ == "__main__":
    main()
