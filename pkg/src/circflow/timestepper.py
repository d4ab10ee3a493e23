"""Explicit RK4 time integration of the perturbation system under a CFL limit."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .background import BackgroundField
from .diagnostics import EnergyReport, TimeSeries, boundary_monitor, energy_report
from .dynamics import PositivityError, State, apply_velocity_bc, check_positive, rhs_parts
from .operators import check_finite

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """A step produced NaN/Inf or a non-positive density."""

    def __init__(self, message: str, step: int, t: float):
        super().__init__(f"step {step} (t={t:.6g}): {message}")
        self.step = step
        self.t = t


@dataclass(frozen=True)
class StepControl:
    cfl_safety: float = 0.4
    t_end: float = 5.0
    max_steps: int = 100_000
    diag_every: int = 1

    def __post_init__(self):
        if not 0.0 < self.cfl_safety <= 1.0:
            raise ValueError(f"0 < cfl_safety <= 1 required, got {self.cfl_safety}")
        if not self.t_end > 0.0:
            raise ValueError(f"t_end > 0 required, got {self.t_end}")
        if self.max_steps < 1 or self.diag_every < 1:
            raise ValueError("max_steps and diag_every must be positive")


def stable_dt(state: State, bg: BackgroundField, cfl_safety: float = 0.4) -> float:
    """cfl_safety * min(advective limit, viscous limit) over all nodes."""
    grid = bg.grid
    p = bg.params
    rho = bg.rho_bar + state.phi
    check_positive(rho)
    h = np.minimum(grid.dr_local[:, None], grid.dz)
    speed = np.sqrt(state.v_r**2 + (bg.u_theta_bar + state.v_theta) ** 2 + state.v_z**2)
    c = np.sqrt(p.gamma * p.A * np.power(rho, p.gamma - 1.0))
    dt_adv = float(np.min(h / (speed + c)))
    dt_visc = float(np.min(rho * h * h / (4.0 * (p.nu1 + max(p.nu2, 0.0)))))
    dt = cfl_safety * min(dt_adv, dt_visc)
    if not dt > 0.0 or not np.isfinite(dt):
        raise ValueError(f"degenerate time step {dt}")
    return dt


def rk4_step(state: State, dt: float, bg: BackgroundField, linearized: bool = False, forcing=None, t: float = 0.0) -> State:
    """One classical RK4 step.

    ``forcing(t)`` (optional) returns an additive source of shape (4, n_r, n_z).
    Wall velocities are re-zeroed after the update and the density is checked.
    """

    def rate(u: np.ndarray, tau: float) -> np.ndarray:
        out, _, _ = rhs_parts(State(u), bg, linearized=linearized)
        if forcing is not None:
            out = out + forcing(tau)
            apply_velocity_bc(out[1:], bg.grid)
        return out

    u = state.data
    k1 = rate(u, t)
    k2 = rate(u + (0.5 * dt) * k1, t + 0.5 * dt)
    k3 = rate(u + (0.5 * dt) * k2, t + 0.5 * dt)
    k4 = rate(u + dt * k3, t + dt)
    new = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    apply_velocity_bc(new[1:], bg.grid)
    check_finite(new, "state")
    check_positive(bg.rho_bar + new[0])
    return State(new)


Sink = Callable[[int, float, State, EnergyReport], None]


@dataclass
class RunResult:
    state: State
    series: TimeSeries
    steps: int
    t: float
    contaminated: bool


def evolve(
    initial: State,
    bg: BackgroundField,
    control: StepControl,
    sinks: Iterable[Sink] = (),
    linearized: bool = False,
    t0: float = 0.0,
    step0: int = 0,
    margin: int = 4,
    contamination_threshold: float = 1e-3,
    reference_amplitude: float | None = None,
    diagnostics: bool = True,
) -> RunResult:
    """Advance ``initial`` to ``control.t_end`` (or ``max_steps`` total steps).

    Diagnostics are sampled at the start and every ``diag_every`` steps.  A run
    is flagged contaminated once the outer-band monitor exceeds
    ``contamination_threshold`` times ``reference_amplitude`` (default: the
    initial max |component|).
    """
    sinks = list(sinks)
    series = TimeSeries()
    state = initial.copy()
    t = t0
    step = step0
    if reference_amplitude is None:
        reference_amplitude = float(np.max(np.abs(initial.data)))
    limit = contamination_threshold * reference_amplitude
    contaminated = False
    last_dt = 0.0

    def sample() -> None:
        nonlocal contaminated
        mon = boundary_monitor(state, bg.grid, margin)
        if mon > limit and reference_amplitude > 0:
            contaminated = True
        rep = energy_report(state, bg, linearized=linearized) if diagnostics else EnergyReport()
        series.append(step, t, last_dt, rep, mon)
        for sink in sinks:
            sink(step, t, state, rep)

    try:
        if step % control.diag_every == 0:
            sample()
        while t < control.t_end and step < control.max_steps:
            dt = stable_dt(state, bg, control.cfl_safety)
            final = t + dt >= control.t_end
            if final:
                dt = control.t_end - t
            state = rk4_step(state, dt, bg, linearized=linearized)
            step += 1
            t = control.t_end if final else t + dt
            last_dt = dt
            if step % control.diag_every == 0:
                sample()
    except (PositivityError, FloatingPointError) as exc:
        err = SimulationError(str(exc), step, t)
        err.series = series
        raise err from exc
    if contaminated:
        log.warning("outer boundary band exceeded %.3g at some sample; run is contaminated", limit)
    return RunResult(state=state, series=series, steps=step, t=t, contaminated=contaminated)
