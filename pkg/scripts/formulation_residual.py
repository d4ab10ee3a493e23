"""Primitive vs perturbation consistency with the exact and the literal pressure remainder."""

import argparse

import numpy as np

from circflow import FlowParams, GridSpec, build_background, build_grid
from circflow.diagnostics import weighted_lp
from circflow.dynamics import formulation_residual, make_bump_ic


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ladder", type=int, nargs="+", default=[64, 128, 256])
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("--gamma", type=float, default=1.4)
    args = ap.parse_args()
    for form in ("taylor", "literal"):
        norms = []
        for n in args.ladder:
            grid = build_grid(GridSpec(n_r=n, n_z=n))
            bg = build_background(grid, FlowParams(gamma=args.gamma))
            res = formulation_residual(make_bump_ic(args.eps, (7.0, 0.0), (1.0, 1.0), grid), bg, q_form=form)
            norms.append(weighted_lp(res, grid))
        orders = np.log2(np.array(norms[:-1]) / np.array(norms[1:]))
        print(f"Q={form:8s} residuals {['%.3e' % v for v in norms]}  orders {np.round(orders, 3).tolist()}")


if __name__ == "__main__":
    main()
