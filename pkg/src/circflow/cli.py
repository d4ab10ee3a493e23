"""Command-line driver: ``circflow <subcommand> (--config FILE | --demo) [--out DIR] [--threads N]``.

Exit codes: 0 pass, 1 threshold failure, 2 usage or configuration error,
3 runtime failure (non-finite values or loss of density positivity).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path

from .io_config import ConfigError, RunConfig, atomic_write, dump_config, parse_config
from .operators import set_num_threads

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("circflow")


class UsageError(Exception):
    pass


def _rows_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: "" if v is None else repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.4g}"


def _print_ladder(title: str, report) -> None:
    print(title)
    for row in report.rows():
        cells = [f"{k}={_fmt(v) if isinstance(v, float) or v is None else v}" for k, v in row.items()]
        print("  " + "  ".join(cells))
    for note in report.notes:
        print(f"  FAIL: {note}")
    print("PASS" if report.passed else "FAIL")


def cmd_steady_check(cfg: RunConfig, out: Path, args) -> int:
    from .experiments import steady_check

    rep = steady_check(cfg.grid, cfg.flow, cfg.ladder)
    atomic_write(out / "steady_check.csv", _rows_csv(rep.rows()))
    atomic_write(out / "steady_check.json", rep.to_json())
    _print_ladder("background residuals (L2_r)", rep)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_residual(cfg: RunConfig, out: Path, args) -> int:
    from .experiments import residual_check

    amp = 0.0 if cfg.ic.zero else cfg.ic.amplitude
    rep = residual_check(cfg.grid, cfg.flow, cfg.ladder, amplitude=amp)
    atomic_write(out / "residual.csv", _rows_csv(rep.rows()))
    atomic_write(out / "residual.json", rep.to_json())
    _print_ladder(f"primitive vs perturbation residual (L2_r), amplitude {amp:g}", rep)
    return EXIT_PASS if rep.passed else EXIT_FAIL


def cmd_evolve(cfg: RunConfig, out: Path, args) -> int:
    from .experiments import run_evolve

    outcome = run_evolve(cfg, out)
    s = outcome.summary
    print(f"steps={s['steps']}  t={s['t_final']:.6g}  N(T)={s['N_final']:.6e}  max N={s['N_max']:.6e}")
    print(f"theorem_ratio={_fmt(s['theorem_ratio'])}  contaminated={s['contaminated']}")
    print(f"wrote {out / 'timeseries.csv'} and {out / 'summary.json'}")
    if s["contaminated"]:
        print("FAIL: outer boundary band contaminated")
        return EXIT_FAIL
    print("PASS")
    return EXIT_PASS


def cmd_sweep(cfg: RunConfig, out: Path, args) -> int:
    from .experiments import run_sweep

    eps = cfg.sweep.epsilons if args.eps is None else args.eps
    if not eps:
        raise UsageError("sweep needs a non-empty epsilon list")
    rep = run_sweep(cfg, eps, out)
    print(f"{'eps':>10} {'N/eps^2':>12} {'thm_ratio':>10} {'A1':>10} {'A2':>10} {'A3':>10}  contaminated")
    for i, e in enumerate(rep.epsilons):
        a = [rep.a_ratios[k][i] for k in ("a1", "a2", "a3")]
        print(
            f"{e:10.1e} {rep.n_over_eps2[i]:12.5g} {rep.theorem_ratios[i]:10.4g} "
            + " ".join(f"{x:10.3e}" for x in a)
            + f"  {rep.contaminated[i]}"
        )
    print(f"N/eps^2 spread {rep.n_scaling_spread():.3%}; theorem_ratio factor {rep.spread(rep.theorem_ratios):.3f}")
    for k, v in rep.a_ratios.items():
        print(f"{k} factor {rep.spread(v):.3f}")
    ok = rep.passed()
    print("PASS" if ok else "FAIL")
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_convergence(cfg: RunConfig, out: Path, args) -> int:
    from .mms import ManufacturedCase, convergence_study

    ladder = list(cfg.convergence.ladder)
    if len(ladder) < 3:
        raise UsageError(f"convergence ladder needs at least 3 grids, got {ladder}")
    study = convergence_study(ManufacturedCase(params=cfg.flow), ladder, cfg.convergence.t_end, cfg.control.cfl_safety)
    atomic_write(out / "convergence.csv", study.to_csv())
    for comp, errs in study.errors.items():
        print(f"{comp:>8}: " + "  ".join(f"{e:.3e}" for e in errs) + f"  slope {study.slopes[comp]:.3f}")
    ok = study.min_slope() >= 1.85
    print("PASS" if ok else f"FAIL: min slope {study.min_slope():.3f} < 1.85")
    return EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {
    "steady-check": (cmd_steady_check, "background residual ladder"),
    "evolve": (cmd_evolve, "evolve a perturbation and record energy diagnostics"),
    "sweep": (cmd_sweep, "evolve over several amplitudes and compare scalings"),
    "convergence": (cmd_convergence, "manufactured-solution convergence study"),
    "residual": (cmd_residual, "primitive/perturbation consistency ladder"),
}


def _eps_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", type=Path, help="JSON run configuration")
        src.add_argument("--demo", action="store_true", help="use the built-in defaults")
        p.add_argument("--out", type=Path, help="output directory (overrides outputs.directory)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker threads (default: all cores)")
        p.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep":
            p.add_argument("--eps", type=_eps_list, help='amplitudes, e.g. "1e-2,1e-3,1e-4"')
    return parser


def load_config(args) -> RunConfig:
    if args.demo:
        return RunConfig()
    try:
        text = args.config.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
    return parse_config(text)


def main(argv=None) -> int:
    from .timestepper import SimulationError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PASS if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        cfg = load_config(args)
        out = args.out if args.out is not None else Path(cfg.outputs.directory)
        out.mkdir(parents=True, exist_ok=True)
        atomic_write(out / "config.json", dump_config(cfg))
        set_num_threads(args.threads)
        return COMMANDS[args.command][0](cfg, out, args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, FloatingPointError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
