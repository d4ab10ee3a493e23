"""Manufactured-solution verification of the perturbation discretization.

The manufactured perturbation is a Gaussian ring in r times a Fourier mode in
z times a sinusoid in t; the velocity carries an extra factor
(r - 1)(r_max - r) so it vanishes on both radial boundaries.

Two forcings are available:

``analytic``
    F = d_t U* - N(U*), where N is the *continuous* right-hand side built
    symbolically from the primitive equations around the exact background.
    The forced discrete solution then differs from U* by the truncation
    error of the scheme, which is what the convergence study measures.
``discrete``
    F = d_t U* - RHS_h(U*) with the discrete perturbation right-hand side.
    The forced discrete solution tracks U* up to time-integration error only.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp

from .background import FlowParams, build_background
from .diagnostics import weighted_lp
from .dynamics import COMPONENTS, State, apply_velocity_bc, rhs_perturbation
from .operators import PERIODIC, Grid, GridSpec, build_grid
from .timestepper import rk4_step, stable_dt


@dataclass(frozen=True)
class ManufacturedCase:
    params: FlowParams = field(default_factory=FlowParams)
    r_max: float = 4.0
    z_period: float = 2.0 * np.pi
    r_center: float = 2.5
    width: float = 0.7
    amp_phi: float = 0.05
    amp_v: float = 0.05
    omega: float = 2.0 * np.pi
    beta: float = 0.0

    def grid_spec(self, n: int) -> GridSpec:
        return GridSpec(
            n_r=n, n_z=n, r_max=self.r_max, z_min=0.0, z_max=self.z_period, beta=self.beta, z_boundary=PERIODIC
        )

    @cached_property
    def _symbolic(self):
        r, z, t = sp.symbols("r z t", real=True)
        p = self.params
        A, g = sp.Float(p.A), sp.Float(p.gamma)
        nu1, nu2 = sp.Float(p.nu1), sp.Float(p.nu2)
        M0, rho0 = sp.Float(p.M0), sp.Float(p.rho_bar0)
        k = 2 * sp.pi / sp.Float(self.z_period)
        om = sp.Float(self.omega)

        gauss = sp.exp(-(((r - self.r_center) / self.width) ** 2))
        wall = (r - 1) * (self.r_max - r) * 4 / sp.Float(self.r_max - 1) ** 2
        phi = self.amp_phi * gauss * sp.cos(k * z) * sp.cos(om * t)
        vr = self.amp_v * wall * gauss * sp.sin(k * z) * sp.cos(om * t + sp.Float(0.3))
        vt = self.amp_v * wall * gauss * sp.cos(k * z) * sp.sin(om * t + sp.Float(0.7))
        vz = self.amp_v * wall * gauss * sp.cos(k * z) * sp.cos(om * t + sp.Float(1.1))
        exact = [phi, vr, vt, vz]

        rho_bar = (rho0 ** (g - 1) + (g - 1) * M0**2 / (2 * A * g) * (1 - 1 / r**2)) ** (1 / (g - 1))
        rho = rho_bar + phi
        ur, ut, uz = vr, M0 / r + vt, vz
        P = A * rho**g
        div = sp.diff(r * ur, r) / r + sp.diff(uz, z)

        def lap_swirl(w):
            return sp.diff(sp.diff(r * w, r) / r, r) + sp.diff(w, z, 2)

        n_rho = -sp.diff(r * rho * ur, r) / r - sp.diff(rho * uz, z)
        n_ur = (
            -(ur * sp.diff(ur, r) + uz * sp.diff(ur, z) - ut**2 / r)
            - sp.diff(P, r) / rho
            + nu1 / rho * lap_swirl(ur)
            + nu2 / rho * sp.diff(div, r)
        )
        n_ut = -(ur * sp.diff(ut, r) + uz * sp.diff(ut, z) + ut * ur / r) + nu1 / rho * lap_swirl(ut)
        n_uz = (
            -(ur * sp.diff(uz, r) + uz * sp.diff(uz, z))
            - sp.diff(P, z) / rho
            + nu1 / rho * (sp.diff(uz, r, 2) + sp.diff(uz, z, 2) + sp.diff(uz, r) / r)
            + nu2 / rho * sp.diff(div, z)
        )
        rates = [sp.diff(e, t) for e in exact]
        forcing = [rt - n for rt, n in zip(rates, (n_rho, n_ur, n_ut, n_uz))]
        args = (r, z, t)
        return (
            sp.lambdify(args, exact, "numpy", cse=True),
            sp.lambdify(args, rates, "numpy", cse=True),
            sp.lambdify(args, forcing, "numpy", cse=True),
        )

    def _eval(self, fn, grid: Grid, t: float) -> np.ndarray:
        R, Z = grid.mesh()
        vals = fn(R, Z, float(t))
        return np.stack([np.broadcast_to(np.asarray(v, dtype=np.float64), grid.shape) for v in vals])

    def exact(self, grid: Grid, t: float) -> State:
        data = self._eval(self._symbolic[0], grid, t)
        apply_velocity_bc(data[1:], grid)
        return State(data)

    def rate(self, grid: Grid, t: float) -> np.ndarray:
        return self._eval(self._symbolic[1], grid, t)

    def analytic_forcing(self, grid: Grid, t: float) -> np.ndarray:
        out = self._eval(self._symbolic[2], grid, t)
        apply_velocity_bc(out[1:], grid)
        return out


class ZeroCase(ManufacturedCase):
    """Manufactured solution identically zero."""

    def _eval(self, fn, grid, t):
        return np.zeros((4,) + grid.shape)


def manufactured_forcing(case: ManufacturedCase, t: float, grid: Grid, bg=None, kind: str = "discrete") -> np.ndarray:
    """Source term making the manufactured solution exact (see module docstring)."""
    if kind == "analytic":
        return case.analytic_forcing(grid, t)
    if kind != "discrete":
        raise ValueError(f"unknown forcing kind {kind!r}")
    if bg is None:
        bg = build_background(grid, case.params)
    out = case.rate(grid, t) - rhs_perturbation(case.exact(grid, t), bg).data
    apply_velocity_bc(out[1:], grid)
    return out


def run_manufactured(
    case: ManufacturedCase, n: int, t_end: float, kind: str | None = "analytic", cfl_safety: float = 0.4
) -> dict[str, float]:
    """Evolve the forced system from the manufactured data; L2_r error per component at t_end."""
    grid = build_grid(case.grid_spec(n))
    bg = build_background(grid, case.params)
    state = case.exact(grid, 0.0)
    forcing = None if kind is None else (lambda tau: manufactured_forcing(case, tau, grid, bg, kind))
    t = 0.0
    while t < t_end:
        dt = stable_dt(state, bg, cfl_safety)
        final = t + dt >= t_end
        if final:
            dt = t_end - t
        state = rk4_step(state, dt, bg, forcing=forcing, t=t)
        t = t_end if final else t + dt
    err = state.data - case.exact(grid, t_end).data
    return {name: weighted_lp(err[k], grid, alpha=1, p=2) for k, name in enumerate(COMPONENTS)}


@dataclass
class ConvergenceStudy:
    ladder: list[int]
    errors: dict[str, list[float]]
    slopes: dict[str, float]
    monotone: bool

    @property
    def conclusive(self) -> bool:
        return self.monotone

    def min_slope(self) -> float:
        return min(self.slopes.values())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["grid", "component", "error", "slope"])
        for comp in COMPONENTS:
            for n, e in zip(self.ladder, self.errors[comp]):
                w.writerow([n, comp, repr(e), repr(self.slopes[comp])])
        return buf.getvalue()


def convergence_study(
    case: ManufacturedCase, ladder=(32, 64, 128), t_end: float = 0.5, cfl_safety: float = 0.4
) -> ConvergenceStudy:
    """Forced runs on a refinement ladder; least-squares slopes of log error against log h."""
    ladder = list(ladder)
    if len(ladder) < 3:
        raise ValueError(f"a convergence ladder needs at least 3 grids, got {ladder}")
    if any(b != 2 * a for a, b in zip(ladder, ladder[1:])):
        raise ValueError(f"ladder must double at each level, got {ladder}")
    runs = [run_manufactured(case, n, t_end, "analytic", cfl_safety) for n in ladder]
    errors = {c: [run[c] for run in runs] for c in COMPONENTS}
    logh = np.log(1.0 / np.array(ladder, dtype=float))
    slopes = {c: float(np.polyfit(logh, np.log(errors[c]), 1)[0]) for c in COMPONENTS}
    monotone = all(all(b < a for a, b in zip(e, e[1:])) for e in errors.values())
    return ConvergenceStudy(ladder=ladder, errors=errors, slopes=slopes, monotone=monotone)


def read_study_csv(text: str) -> list[dict]:
    rows = list(csv.DictReader(io.StringIO(text)))
    for row in rows:
        row["grid"] = int(row["grid"])
        row["error"] = float(row["error"])
        row["slope"] = float(row["slope"])
    return rows
