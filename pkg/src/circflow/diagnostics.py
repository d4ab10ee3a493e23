"""Weighted norms, energy functionals and stability ratios.

Conventions
-----------
* ``(a, b) = int a b dr dz`` (unweighted measure); r-weights are written
  explicitly inside each integrand.
* ``||w||_{H~k}^2 = sum_{j<=k} sum_{a+b=j} int r (d_r^a d_z^b w)^2 dr dz``.
* Integrals use 2-D trapezoid weights on the (stretched) grid; reductions are
  numpy's pairwise summation over a fixed-shape array, so they do not depend
  on the operator thread count.

Time derivatives come from the exact semi-discrete tendency.  Second time
derivatives (and d_t f, d_t g) are central differences of the tendency along
the flow direction: ``(T(U + d F) - T(U - d F)) / (2 d)`` with ``F = T(U)`` and
``d`` the current stable step, which is second-order accurate in ``d``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .background import BackgroundField
from .dynamics import State, rhs_parts
from .operators import DIRICHLET, Grid, cyl_div, d_r, d_rr, d_z, d_zz


def weighted_lp(w: np.ndarray, grid: Grid, alpha: float = 1, p: float = 2) -> float:
    """(sum_q W_q |w|^p r^alpha)^(1/p) with trapezoid weights W."""
    if p < 1:
        raise ValueError(f"p >= 1 required, got {p}")
    w = np.abs(np.asarray(w, dtype=np.float64))
    scale = float(np.max(w)) if w.size else 0.0
    if scale == 0.0:
        return 0.0
    # scaling by max|w| keeps |w|^p clear of underflow and overflow
    integrand = grid.quad_weights * (w / scale) ** p
    if alpha:
        integrand = integrand * grid.r**alpha
    return scale * float(np.sum(integrand)) ** (1.0 / p)


def integrate(w: np.ndarray, grid: Grid) -> float:
    return float(np.sum(grid.quad_weights * w))


def inner(a: np.ndarray, b: np.ndarray, grid: Grid) -> float:
    """(a, b) = int a b dr dz; stacked inputs of shape (k, n_r, n_z) are summed over k."""
    prod = np.asarray(a) * np.asarray(b)
    if prod.ndim == 3:
        prod = prod.sum(axis=0)
    return integrate(prod, grid)


def rsq(w: np.ndarray, grid: Grid, weight: np.ndarray | float = 1.0) -> float:
    """int r * weight * w^2 dr dz, i.e. ||sqrt(r weight) w||_2^2."""
    return integrate(grid.r * weight * w * w, grid)


class Derivs:
    """Memoised mixed derivatives d_r^a d_z^b of one field."""

    def __init__(self, w: np.ndarray, grid: Grid):
        self.grid = grid
        self._cache = {(0, 0): np.asarray(w, dtype=np.float64)}

    def _z(self, b: int) -> np.ndarray:
        key = (0, b)
        if key not in self._cache:
            g = self.grid
            if b == 1:
                val = d_z(self._cache[(0, 0)], g)
            elif b == 2:
                val = d_zz(self._cache[(0, 0)], g)
            else:
                val = d_zz(self._z(b - 2), g)
            self._cache[key] = val
        return self._cache[key]

    def __call__(self, a: int, b: int) -> np.ndarray:
        key = (a, b)
        if key in self._cache:
            return self._cache[key]
        g = self.grid
        if a == 0:
            return self._z(b)
        if a == 1:
            val = d_r(self._z(b), g)
        elif a == 2:
            val = d_rr(self._z(b), g)
        else:
            val = d_rr(self(a - 2, b), g)
        self._cache[key] = val
        return val


def _multi_indices(j: int):
    return [(a, j - a) for a in range(j, -1, -1)]


def htilde_sq(w, grid: Grid, k: int) -> float:
    """Squared H~k norm; ``w`` may be one field, a stack, or a list of fields/Derivs."""
    if k not in (0, 1, 2, 3):
        raise ValueError(f"order k must be in 0..3, got {k}")
    total = 0.0
    for d in _as_derivs(w, grid):
        for j in range(k + 1):
            for a, b in _multi_indices(j):
                total += rsq(d(a, b), grid)
    return total


def grad_htilde_sq(w, grid: Grid, k: int) -> float:
    """||D w||_{H~k}^2 = sum over (d_r w, d_z w) of their H~k norms."""
    total = 0.0
    for d in _as_derivs(w, grid):
        for j in range(k + 1):
            for a, b in _multi_indices(j):
                total += rsq(d(a + 1, b), grid) + rsq(d(a, b + 1), grid)
    return total


def _as_derivs(w, grid: Grid) -> list[Derivs]:
    if isinstance(w, Derivs):
        return [w]
    if isinstance(w, (list, tuple)):
        return [x if isinstance(x, Derivs) else Derivs(x, grid) for x in w]
    w = np.asarray(w, dtype=np.float64)
    if w.ndim == 3:
        return [Derivs(x, grid) for x in w]
    return [Derivs(w, grid)]


# -- energy report ---------------------------------------------------------

INTEGRATED = (
    "d_L2",
    "d_time",
    "d_z1",
    "d_z2",
    "d_tt",
    "d_press",
    "n_diss",
    "thm_diss",
    "a1",
    "a2",
    "a3",
)


@dataclass
class EnergyReport:
    """Every weighted functional at one time; all entries are non-negative."""

    e_L2: float = 0.0
    d_L2: float = 0.0
    e_grad: float = 0.0
    d_time: float = 0.0
    e_z1: float = 0.0
    e_z2: float = 0.0
    d_z1: float = 0.0
    d_z2: float = 0.0
    e_tD: float = 0.0
    d_tt: float = 0.0
    e_press: float = 0.0
    d_press: float = 0.0
    a1: float = 0.0
    a2: float = 0.0
    a3: float = 0.0
    phi_h2: float = 0.0
    v_h3: float = 0.0
    dtv_h1: float = 0.0
    dtphi_h1: float = 0.0
    n_inst: float = 0.0
    n_diss: float = 0.0
    thm_diss: float = 0.0

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[float]:
        return [getattr(self, n) for n in self.names()]


def _l23_dissipation(dvr: Derivs, dvt: Derivs, dvz: Derivs, grid: Grid, j: int) -> float:
    r = grid.r
    vr, vt, vz = dvr(0, j), dvt(0, j), dvz(0, j)
    total = rsq(vr, grid, 1.0 / (r * r)) + rsq(vt, grid, 1.0 / (r * r))
    for d in (dvr, dvt, dvz):
        total += rsq(d(1, j), grid) + rsq(d(0, j + 1), grid)
    total += rsq(dvr(1, j) + vr / r + dvz(0, j + 1), grid)
    return total


def energy_report(
    state: State,
    bg: BackgroundField,
    probe_dt: float | None = None,
    linearized: bool = False,
    q_form: str = "taylor",
) -> EnergyReport:
    """Assemble every functional for one state.

    ``probe_dt`` is the pseudo-step of the central difference used for second
    time derivatives (defaults to the CFL step of the state).
    """
    grid = bg.grid
    p = bg.params
    r = grid.r
    rb = bg.rho_bar
    rg = bg.rho_bar_gm2
    if not np.any(state.data):
        return EnergyReport()

    if probe_dt is None:
        from .timestepper import stable_dt

        probe_dt = stable_dt(state, bg)

    tend, f, g = rhs_parts(state, bg, linearized=linearized, q_form=q_form)
    plus, f_p, g_p = rhs_parts(State(state.data + probe_dt * tend), bg, linearized=linearized, q_form=q_form)
    minus, f_m, g_m = rhs_parts(State(state.data - probe_dt * tend), bg, linearized=linearized, q_form=q_form)
    tt = (plus - minus) / (2.0 * probe_dt)

    phi, vr, vt, vz = state.data
    dphi, dvr_t, dvt_t, dvz_t = tend
    pg = rg * phi

    Dvr, Dvt, Dvz = Derivs(vr, grid), Derivs(vt, grid), Derivs(vz, grid)
    Dv = [Dvr, Dvt, Dvz]
    Dphi = Derivs(phi, grid)
    Dpg = Derivs(pg, grid)
    Dtv = [Derivs(x, grid) for x in (dvr_t, dvt_t, dvz_t)]
    Dtphi = Derivs(dphi, grid)

    rep = EnergyReport()
    # weighted L2 energy and its dissipation list
    rep.e_L2 = sum(rsq(x, grid, rb) for x in (vr, vt, vz)) + rsq(phi, grid, rg)
    grad_v = sum(rsq(d(1, 0), grid) + rsq(d(0, 1), grid) for d in Dv)
    div = Dvr(1, 0) + vr / r + Dvz(0, 1)
    div_sq = rsq(div, grid)
    rep.d_L2 = rsq(vr, grid, 1.0 / (r * r)) + rsq(vt, grid, 1.0 / (r * r)) + grad_v + div_sq
    rep.e_grad = grad_v + div_sq
    rep.d_time = sum(rsq(x, grid, rb) for x in (dvr_t, dvt_t, dvz_t)) + rsq(dphi, grid, rg)

    # z-differentiated energies
    for j in (1, 2):
        e = sum(rsq(d(0, j), grid, rb) for d in Dv) + rsq(Dphi(0, j), grid, rg)
        setattr(rep, f"e_z{j}", e)
        setattr(rep, f"d_z{j}", _l23_dissipation(Dvr, Dvt, Dvz, grid, j))

    # time-differentiated gradient energy and second time derivatives
    tdiv = Dtv[0](1, 0) + dvr_t / r + Dtv[2](0, 1)
    rep.e_tD = sum(rsq(d(1, 0), grid) + rsq(d(0, 1), grid) for d in Dtv) + rsq(tdiv, grid)
    rep.d_tt = sum(rsq(x, grid, rb) for x in tt[1:]) + rsq(tt[0], grid, rg)

    # pressure-like higher order energy and dissipation
    Dpgz = Derivs(rg * Dphi(0, 1), grid)
    rep.e_press = rsq(Dpg(1, 0), grid) + rsq(Dpgz(1, 0), grid) + rsq(Dpg(2, 0), grid)
    rep.d_press = (
        rsq(Dpg(1, 0), grid)
        + rsq(Dvr(2, 0), grid)
        + rsq(Dpgz(1, 0), grid)
        + rsq(Dvr(2, 1), grid)
        + rsq(Dpg(2, 0), grid)
    )

    # nonlinear pairings
    if not linearized:
        gs = np.stack(g)
        rep.a1 = abs(inner(gs, rb * r * state.velocity, grid)) + abs(inner(f, rg * r * phi, grid))
        rep.a2 = abs(inner(gs, rb * r * tend[1:], grid)) + abs(inner(f, r * rg * dphi, grid))
        gt = (np.stack(g_p) - np.stack(g_m)) / (2.0 * probe_dt)
        ft = (f_p - f_m) / (2.0 * probe_dt)
        rep.a3 = (
            abs(inner(gt, rb * r * tend[1:], grid))
            + abs(inner(ft, r * rg * dphi, grid))
            + abs(inner(gt, rb * r * tt[1:], grid))
            + abs(inner(ft, r * rg * tt[0], grid))
        )

    # master functional pieces
    rep.phi_h2 = htilde_sq(Dpg, grid, 2)
    rep.v_h3 = htilde_sq(Dv, grid, 3)
    rep.dtv_h1 = htilde_sq(Dtv, grid, 1)
    rep.dtphi_h1 = htilde_sq(Dtphi, grid, 1)
    rep.n_inst = rep.v_h3 + rep.dtv_h1 + rep.phi_h2 + rep.dtphi_h1

    grad_v_h3 = grad_htilde_sq(Dv, grid, 3)
    grad_pg_h1 = grad_htilde_sq(Dpg, grid, 1)
    rep.n_diss = (
        rsq(vr, grid, 1.0 / (r * r))
        + rsq(vt, grid, 1.0 / (r * r))
        + grad_v_h3
        + htilde_sq(Dtv, grid, 2)
        + rep.dtphi_h1
        + rsq(tt[0], grid)
        + sum(rsq(x, grid) for x in tt[1:])
        + grad_pg_h1
    )
    rep.thm_diss = grad_pg_h1 + grad_v_h3
    return rep


@dataclass
class TimeSeries:
    """Sampled reports plus running trapezoid integrals of the dissipation integrands."""

    steps: list[int] = field(default_factory=list)
    times: list[float] = field(default_factory=list)
    dts: list[float] = field(default_factory=list)
    reports: list[EnergyReport] = field(default_factory=list)
    integrals: dict[str, list[float]] = field(default_factory=lambda: {k: [] for k in INTEGRATED})
    monitor: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    def append(self, step: int, t: float, dt: float, rep: EnergyReport, monitor: float = 0.0) -> None:
        if self.times and not t > self.times[-1]:
            raise ValueError(f"sample times must increase: {t} after {self.times[-1]}")
        if self.times:
            h = t - self.times[-1]
            prev = self.reports[-1]
            for k in INTEGRATED:
                inc = 0.5 * h * (getattr(prev, k) + getattr(rep, k))
                self.integrals[k].append(self.integrals[k][-1] + inc)
        else:
            for k in INTEGRATED:
                self.integrals[k].append(0.0)
        self.steps.append(step)
        self.times.append(t)
        self.dts.append(dt)
        self.reports.append(rep)
        self.monitor.append(monitor)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(rep, name) for rep in self.reports])

    def integral(self, name: str) -> np.ndarray:
        return np.array(self.integrals[name])


def n_functional(series: TimeSeries) -> np.ndarray:
    """N(t) at every sample: instantaneous part plus integrated dissipation."""
    if not len(series):
        raise ValueError("empty time series")
    return series.column("n_inst") + series.integral("n_diss")


def initial_size(initial: State, grid: Grid) -> float:
    """||phi0||_{H~2}^2 + ||v0||_{H~3}^2."""
    return htilde_sq(initial.phi, grid, 2) + htilde_sq(initial.velocity, grid, 3)


def theorem_ratio(series: TimeSeries, initial: State, grid: Grid) -> float | None:
    """Empirical constant of the global bound; None for zero initial data."""
    if not len(series):
        raise ValueError("empty time series")
    denom = initial_size(initial, grid)
    if denom == 0.0:
        return None
    sup = float(np.max(series.column("phi_h2") + series.column("v_h3")))
    return (sup + series.integrals["thm_diss"][-1]) / denom


def a_ratios(series: TimeSeries) -> dict[str, float | None]:
    """|int_0^T A_i dt| / N(T)^(3/2) for i = 1, 2, 3."""
    n_end = n_functional(series)[-1]
    out = {}
    for k in ("a1", "a2", "a3"):
        out[k] = None if n_end == 0.0 else abs(series.integrals[k][-1]) / n_end**1.5
    return out


def boundary_monitor(state: State, grid: Grid, margin: int = 4) -> float:
    """Max |component| in the outermost ``margin`` radial columns (and z edges if Dirichlet)."""
    if not 0 < margin < min(grid.shape) / 4:
        raise ValueError(f"margin must be in (0, {min(grid.shape) / 4}), got {margin}")
    d = state.data
    val = float(np.max(np.abs(d[:, -margin:, :])))
    if grid.spec.z_boundary == DIRICHLET:
        val = max(val, float(np.max(np.abs(d[:, :, :margin]))), float(np.max(np.abs(d[:, :, -margin:]))))
    return val


def l2_balance_residual(state: State, bg: BackgroundField) -> dict[str, float]:
    """Semi-discrete residual of the weighted L2 energy identity of the linearized system.

    For E = 1/2 ||sqrt(rho_bar r) v||^2 + (A g / 2) ||sqrt(rho_bar^(g-2) r) phi||^2
    the continuous identity (v = 0 on r = 1, r_max; periodic z) reads

        dE/dt = -nu1 (||v_r/sqrt r||^2 + ||v_th/sqrt r||^2 + ||sqrt r Dv||^2)
                - nu2 ||sqrt r div v||^2 + (2 M0 v_th / r, rho_bar v_r).

    dE/dt is formed from the exact linear tendency; the returned ``residual``
    is the mismatch, which is pure discretization error.
    """
    grid = bg.grid
    p = bg.params
    r = grid.r
    tend, _, _ = rhs_parts(state, bg, linearized=True)
    phi, vr, vt, vz = state.data
    dEdt = inner(bg.rho_bar * r * state.velocity, tend[1:], grid) + p.A * p.gamma * inner(
        bg.rho_bar_gm2 * r * phi, tend[0], grid
    )
    grad_v = sum(rsq(d_r(x, grid), grid) + rsq(d_z(x, grid), grid) for x in (vr, vt, vz))
    dissipation = p.nu1 * (rsq(vr, grid, 1.0 / (r * r)) + rsq(vt, grid, 1.0 / (r * r)) + grad_v)
    dissipation += p.nu2 * rsq(cyl_div(vr, vz, grid), grid)
    cross = inner(2.0 * p.M0 / r * vt, bg.rho_bar * vr, grid)
    return {
        "dEdt": dEdt,
        "dissipation": dissipation,
        "cross": cross,
        "residual": dEdt + dissipation - cross,
    }


def series_summary(series: TimeSeries, initial: State, grid: Grid) -> dict:
    n = n_functional(series)
    return {
        "t_final": series.times[-1],
        "N_final": float(n[-1]),
        "N_max": float(np.max(n)),
        "theorem_ratio": theorem_ratio(series, initial, grid),
        "a_ratios": a_ratios(series),
        "monitor_max": float(max(series.monitor)),
    }


__all__: Sequence[str] = [
    "EnergyReport",
    "TimeSeries",
    "weighted_lp",
    "inner",
    "htilde_sq",
    "grad_htilde_sq",
    "energy_report",
    "n_functional",
    "theorem_ratio",
    "a_ratios",
    "boundary_monitor",
    "l2_balance_residual",
]
