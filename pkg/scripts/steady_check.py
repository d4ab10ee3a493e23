"""Background residual ladder for several exponents (gamma = 2 and 3 take the short-circuit branches)."""

import argparse

from circflow import FlowParams, GridSpec
from circflow.experiments import steady_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ladder", type=int, nargs="+", default=[64, 128, 256])
    args = ap.parse_args()
    for gamma in (1.4, 5.0 / 3.0, 2.0, 3.0):
        rep = steady_check(GridSpec(n_z=16), FlowParams(gamma=gamma), args.ladder)
        orders = ", ".join(f"{o:.3f}" for o in rep.orders["r_momentum"])
        print(f"gamma={gamma:.4g}  r-momentum {rep.norms['r_momentum']}  orders [{orders}]  passed={rep.passed}")


if __name__ == "__main__":
    main()
