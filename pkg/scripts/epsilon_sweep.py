"""Evolve the default bump at several amplitudes and compare the scaled energy functionals."""

import argparse
from pathlib import Path

from circflow.experiments import run_sweep
from circflow.io_config import RunConfig, parse_config
from circflow.operators import set_num_threads


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4])
    ap.add_argument("--out", type=Path, default=Path("out/sweep"))
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    set_num_threads(args.threads)
    cfg = parse_config(args.config.read_text()) if args.config else RunConfig()
    rep = run_sweep(cfg, args.eps, args.out)
    print(rep.to_json())


if __name__ == "__main__":
    main()
