"""Manufactured-solution convergence study, plus the unforced and discretely forced variants."""

import argparse
from pathlib import Path

from circflow.mms import ManufacturedCase, convergence_study, run_manufactured


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ladder", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--t-end", type=float, default=0.5)
    ap.add_argument("--out", type=Path, default=Path("out/mms"))
    args = ap.parse_args()
    case = ManufacturedCase()
    study = convergence_study(case, args.ladder, args.t_end)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "convergence.csv").write_text(study.to_csv())
    for comp, errs in study.errors.items():
        print(f"{comp:>8}: {['%.3e' % e for e in errs]}  slope {study.slopes[comp]:.3f}")
    n = args.ladder[0]
    for kind in (None, "discrete"):
        err = run_manufactured(case, n, args.t_end, kind)
        print(f"n={n} forcing={kind}: " + ", ".join(f"{k} {v:.3e}" for k, v in err.items()))


if __name__ == "__main__":
    main()
