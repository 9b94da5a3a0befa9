"""Exact TCL rates against the second plus fourth order expansion under coupling halving.

    python3 scripts/series_check.py --nbar 0.5 --delta 0.5 --t 0.3
"""
import argparse

import numpy as np

from jcmaster.jc_exact import ModelParams, Thermal, Vacuum
from jcmaster.perturbation import series_consistency

RATES = ("lamb_shift", "gain", "loss", "dephasing")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nbar", type=float, default=0.0)
    ap.add_argument("--delta", type=float, default=1.0)
    ap.add_argument("--t", type=float, default=0.4, help="time in units of 1/g")
    ap.add_argument("--nodes", type=int, default=16)
    args = ap.parse_args()
    env = Vacuum() if args.nbar == 0 else Thermal(args.nbar)
    rep = series_consistency(env, ModelParams(1.0, args.delta), args.t, n_quad=args.nodes)
    np.set_printoptions(precision=6, suppress=False)
    print("rate            g^2 fit      g^2 pert     g^4 fit      g^4 pert     rel. mismatch (g^2, g^4)")
    for k, name in enumerate(RATES):
        f2, f4 = rep.fitted[:, k]
        p2, p4 = rep.perturbative[:, k]
        m2, m4 = rep.relative_mismatch[:, k]
        print(f"{name:<14} {f2:+.5e} {p2:+.5e} {f4:+.5e} {p4:+.5e} {m2:.1e} {m4:.1e}")
    print("remainder ratios under halving (expect ~64):")
    for name, col in zip(RATES, rep.ratios.T):
        print(f"  {name:<12}", " ".join(f"{r:7.2f}" for r in col))


if __name__ == "__main__":
    main()
