"""Experiment drivers shared by the command line, the scripts and the acceptance tests."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .background import FlowParams, background_residual, build_background
from .diagnostics import l2_balance_residual, series_summary, weighted_lp
from .dynamics import State, formulation_residual, make_bump_ic
from .io_config import ICConfig, RunConfig, atomic_write, write_snapshot, write_timeseries
from .operators import GridSpec, build_grid
from .timestepper import RunResult, evolve

STEADY_TOL = 1e-12
MIN_ORDER = 1.8


def observed_orders(values) -> list[float | None]:
    """log2 ratios of successive values on a doubling ladder (None where undefined)."""
    v = np.abs(np.asarray(values, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.log2(v[:-1] / v[1:])
    return [float(x) if np.isfinite(x) else None for x in q]


def _min_order(orders) -> float:
    """Worst order; an undefined order counts as a failure."""
    return min(-np.inf if o is None else o for o in orders)


def _check_ladder(ladder) -> list[int]:
    ladder = [int(n) for n in ladder]
    if len(ladder) < 2:
        raise ValueError(f"a refinement ladder needs at least 2 grids, got {ladder}")
    if any(b != 2 * a for a, b in zip(ladder, ladder[1:])):
        raise ValueError(f"ladder must double at each level, got {ladder}")
    return ladder


@dataclass
class LadderReport:
    """Norms per grid on a refinement ladder plus pass/fail against thresholds."""

    ladder: list[int]
    norms: dict[str, list[float]]
    orders: dict[str, list[float]]
    passed: bool
    notes: list[str] = field(default_factory=list)

    def rows(self) -> list[dict]:
        out = []
        for i, n in enumerate(self.ladder):
            row = {"grid": n}
            for k, vals in self.norms.items():
                row[k] = vals[i]
                row[f"order_{k}"] = self.orders[k][i - 1] if i > 0 else None
            out.append(row)
        return out

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2)


def steady_check(spec: GridSpec, params: FlowParams, ladder=(64, 128, 256), min_order: float = MIN_ORDER) -> LadderReport:
    """Background residuals on a ladder; continuity and theta must vanish, r must converge."""
    ladder = _check_ladder(ladder)
    norms = {"continuity": [], "r_momentum": [], "theta_momentum": []}
    for n in ladder:
        res = background_residual(build_grid(spec.refined(n)), params)
        for k in norms:
            norms[k].append(res[k])
    orders = {k: observed_orders(v) for k, v in norms.items()}
    notes = []
    ok = True
    for k in ("continuity", "theta_momentum"):
        if max(norms[k]) > STEADY_TOL:
            ok = False
            notes.append(f"{k} residual {max(norms[k]):.3e} exceeds {STEADY_TOL:g}")
    if _min_order(orders["r_momentum"]) < min_order:
        ok = False
        notes.append(f"r_momentum order {_min_order(orders['r_momentum']):.3f} below {min_order}")
    return LadderReport(ladder, norms, orders, ok, notes)


def default_perturbation(grid, amplitude: float = 1e-2) -> State:
    return make_bump_ic(amplitude, (7.0, 0.0), (1.0, 1.0), grid)


def residual_check(
    spec: GridSpec, params: FlowParams, ladder=(64, 128, 256), amplitude: float = 1e-2, min_order: float = MIN_ORDER
) -> LadderReport:
    """Consistency of primitive and perturbation right-hand sides on a ladder."""
    ladder = _check_ladder(ladder)
    norms = {"residual": []}
    for n in ladder:
        grid = build_grid(spec.refined(n))
        bg = build_background(grid, params)
        res = formulation_residual(default_perturbation(grid, amplitude), bg)
        norms["residual"].append(weighted_lp(res, grid, alpha=1, p=2))
    orders = {"residual": observed_orders(norms["residual"])}
    notes = []
    ok = True
    if amplitude == 0.0:
        ok = all(v == 0.0 for v in norms["residual"])
        if not ok:
            notes.append("zero perturbation left a nonzero residual")
    elif _min_order(orders["residual"]) < min_order:
        ok = False
        notes.append(f"residual order {_min_order(orders['residual']):.3f} below {min_order}")
    return LadderReport(ladder, norms, orders, ok, notes)


def balance_check(
    spec: GridSpec, params: FlowParams, ladder=(64, 128, 256), amplitude: float = 1e-2, min_order: float = MIN_ORDER
) -> LadderReport:
    """Residual of the linearized weighted-L2 energy identity on a ladder."""
    ladder = _check_ladder(ladder)
    norms = {"residual": [], "dEdt": [], "dissipation": [], "cross": []}
    for n in ladder:
        grid = build_grid(spec.refined(n))
        bg = build_background(grid, params)
        bal = l2_balance_residual(default_perturbation(grid, amplitude), bg)
        norms["residual"].append(abs(bal["residual"]))
        for k in ("dEdt", "dissipation", "cross"):
            norms[k].append(bal[k])
    orders = {k: observed_orders(v) for k, v in norms.items()}
    ok = _min_order(orders["residual"]) >= min_order
    notes = [] if ok else [f"balance residual order {_min_order(orders['residual']):.3f} below {min_order}"]
    return LadderReport(ladder, norms, orders, ok, notes)


def initial_state(ic: ICConfig, grid) -> State:
    if ic.zero:
        return State.zeros(grid)
    return make_bump_ic(ic.amplitude, ic.center, ic.widths, grid, which=ic.components)


@dataclass
class EvolveOutcome:
    result: RunResult
    initial: State
    summary: dict


def run_evolve(cfg: RunConfig, out_dir: str | Path | None = None, ic: ICConfig | None = None) -> EvolveOutcome:
    """Run one evolution; optionally write series, snapshots and a summary into ``out_dir``."""
    ic = cfg.ic if ic is None else ic
    grid = build_grid(cfg.grid)
    bg = build_background(grid, cfg.flow)
    init = initial_state(ic, grid)
    sinks = []
    if out_dir is not None and cfg.outputs.snapshot_every > 0:
        snap_dir = Path(out_dir) / "snapshots"
        every = cfg.outputs.snapshot_every

        def snap(step, t, state, rep):
            if step % every == 0:
                write_snapshot(state, snap_dir / f"step_{step:07d}", cfg.grid, cfg.flow, t, step)

        sinks.append(snap)
    result = evolve(
        init,
        bg,
        cfg.control,
        sinks=sinks,
        linearized=cfg.linearized,
        margin=cfg.outputs.margin,
        contamination_threshold=cfg.outputs.contamination_threshold,
    )
    summary = series_summary(result.series, init, grid)
    summary.update(steps=result.steps, contaminated=result.contaminated, epsilon=0.0 if ic.zero else ic.amplitude)
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_timeseries(result.series, out_dir / "timeseries.csv")
        atomic_write(out_dir / "summary.json", json.dumps(summary, indent=2, sort_keys=True))
    return EvolveOutcome(result, init, summary)


@dataclass
class SweepReport:
    epsilons: list[float]
    n_over_eps2: list[float]
    theorem_ratios: list[float]
    a_ratios: dict[str, list[float]]
    completed: list[bool]
    contaminated: list[bool]

    @staticmethod
    def spread(values) -> float:
        """max/min of magnitudes (1 for a single value)."""
        v = np.abs(np.asarray(values, dtype=float))
        return float(v.max() / v.min())

    def n_scaling_spread(self) -> float:
        """(max - min) / min of N(T)/eps^2 across the sweep."""
        return self.spread(self.n_over_eps2) - 1.0

    def stable(self) -> bool:
        return all(self.completed) and not any(self.contaminated)

    def passed(self, n_tol: float = 0.15, ratio_factor: float = 1.5, a_factor: float = 2.0) -> bool:
        return (
            self.stable()
            and self.n_scaling_spread() <= n_tol
            and self.spread(self.theorem_ratios) <= ratio_factor
            and all(self.spread(v) <= a_factor for v in self.a_ratios.values())
        )

    def to_json(self) -> str:
        d = dataclasses.asdict(self)
        d["n_scaling_spread"] = self.n_scaling_spread()
        d["theorem_ratio_spread"] = self.spread(self.theorem_ratios)
        d["a_ratio_spread"] = {k: self.spread(v) for k, v in self.a_ratios.items()}
        d["passed"] = self.passed()
        return json.dumps(d, indent=2)


def run_sweep(cfg: RunConfig, epsilons, out_dir: str | Path | None = None) -> SweepReport:
    """One evolution per amplitude with otherwise identical configuration."""
    epsilons = [float(e) for e in epsilons]
    if not epsilons:
        raise ValueError("sweep needs at least one epsilon")
    if any(e <= 0 for e in epsilons):
        raise ValueError(f"sweep amplitudes must be positive, got {epsilons}")
    n_scaled, thm, done, cont = [], [], [], []
    ar = {"a1": [], "a2": [], "a3": []}
    for eps in epsilons:
        ic = dataclasses.replace(cfg.ic, amplitude=eps, zero=False)
        sub = None if out_dir is None else Path(out_dir) / f"eps_{eps:.0e}"
        outcome = run_evolve(cfg, sub, ic)
        s = outcome.summary
        n_scaled.append(s["N_final"] / eps**2)
        thm.append(s["theorem_ratio"])
        done.append(outcome.result.t >= cfg.control.t_end)
        cont.append(outcome.result.contaminated)
        for k in ar:
            ar[k].append(s["a_ratios"][k])
    report = SweepReport(epsilons, n_scaled, thm, ar, done, cont)
    if out_dir is not None:
        atomic_write(Path(out_dir) / "sweep.json", report.to_json())
    return report
