"""Right-hand sides of the perturbation system around the circulatory flow.

Unknowns are (phi, v_r, v_theta, v_z) with rho = rho_bar + phi and
u = (v_r, M0/r + v_theta, v_z).  The linear part is

    phi_t   = -(1/r) d_r(r rho_bar v_r) - d_z(rho_bar v_z)                        + f
    v_r,t   =  2 M0 v_theta / r^2 - A g d_r(rho_bar^(g-2) phi)
               + nu1/rho_bar Lswirl(v_r) + nu2/rho_bar d_r div(v)                  + g1
    v_th,t  =  nu1/rho_bar Lswirl(v_theta)                                         + g2
    v_z,t   = -A g d_z(rho_bar^(g-2) phi)
               + nu1/rho_bar Laxial(v_z) + nu2/rho_bar d_z div(v)                  + g3

with the quadratic remainders f, g1, g2, g3 (see :func:`nonlinear_f`,
:func:`nonlinear_g`).  The zero state is an exact zero of the discrete
right-hand side, so the background is preserved bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .background import BackgroundField, FlowParams, power
from .operators import (
    DIRICHLET,
    Grid,
    check_finite,
    cyl_div,
    d_r,
    d_z,
    visc_axial,
    visc_swirl,
)

COMPONENTS = ("phi", "v_r", "v_theta", "v_z")

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
# mapped to [0, 1]
_GL_S = 0.5 * (_GL_NODES + 1.0)
_GL_W = 0.5 * _GL_WEIGHTS


class PositivityError(FloatingPointError):
    """Total density rho_bar + phi is not strictly positive."""


@dataclass
class State:
    """Perturbation unknowns stacked in one array of shape (4, n_r, n_z)."""

    data: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid) -> "State":
        return cls(np.zeros((4,) + grid.shape))

    @classmethod
    def from_fields(cls, phi, v_r, v_theta, v_z) -> "State":
        return cls(np.stack([np.asarray(a, dtype=np.float64) for a in (phi, v_r, v_theta, v_z)]))

    @property
    def phi(self) -> np.ndarray:
        return self.data[0]

    @property
    def v_r(self) -> np.ndarray:
        return self.data[1]

    @property
    def v_theta(self) -> np.ndarray:
        return self.data[2]

    @property
    def v_z(self) -> np.ndarray:
        return self.data[3]

    @property
    def velocity(self) -> np.ndarray:
        return self.data[1:]

    def copy(self) -> "State":
        return State(self.data.copy())

    def scaled(self, factor: float) -> "State":
        return State(factor * self.data)


@dataclass
class Tendency:
    """Time derivatives (dphi, dv_r, dv_theta, dv_z), same layout as :class:`State`."""

    data: np.ndarray

    @property
    def dphi(self) -> np.ndarray:
        return self.data[0]

    @property
    def dv_r(self) -> np.ndarray:
        return self.data[1]

    @property
    def dv_theta(self) -> np.ndarray:
        return self.data[2]

    @property
    def dv_z(self) -> np.ndarray:
        return self.data[3]

    @property
    def velocity(self) -> np.ndarray:
        return self.data[1:]


def check_positive(total_rho: np.ndarray, where: str = "") -> None:
    if not np.all(total_rho > 0.0):
        idx = np.unravel_index(int(np.argmin(np.where(np.isnan(total_rho), -np.inf, total_rho))), total_rho.shape)
        msg = f"total density not positive at node {tuple(int(k) for k in idx)}"
        raise PositivityError(msg + (f" ({where})" if where else ""))


def q_term(phi: np.ndarray, rho_bar: np.ndarray, gamma: float, A: float = 1.0, form: str = "taylor") -> np.ndarray:
    """Quadratic remainder Q of the pressure-gradient expansion.

    ``form="taylor"`` (used by the solver) is the exact remainder of the
    enthalpy h(rho) = A g/(g-1) rho^(g-1) about rho_bar,

        Q = A g (g-2) phi^2 int_0^1 (rho_bar + s phi)^(g-3) (1 - s) ds,

    so that A g d(rho_bar^(g-2) phi) + dQ equals d(h(rho) - h(rho_bar)).
    ``form="literal"`` evaluates the variant g (g-2)/2 phi^2 int_0^1
    (rho_bar + s phi)^(g-3) s ds, which is about half of the true remainder
    and is kept for comparison only.  The s-integral is 8-point Gauss-Legendre.
    """
    phi = np.asarray(phi, dtype=np.float64)
    rho_bar = np.asarray(rho_bar, dtype=np.float64)
    if gamma == 2.0:
        return np.zeros(np.broadcast(phi, rho_bar).shape)
    if form == "taylor":
        coeff = A * gamma * (gamma - 2.0)
        kernel = 1.0 - _GL_S
    elif form == "literal":
        coeff = 0.5 * gamma * (gamma - 2.0)
        kernel = _GL_S
    else:
        raise ValueError(f"unknown Q form {form!r}")
    integral = np.zeros(np.broadcast(phi, rho_bar).shape)
    for s, w, k in zip(_GL_S, _GL_W, kernel):
        base = rho_bar + s * phi
        check_positive(base, "Q quadrature node")
        integral = integral + (w * k) * power(base, gamma - 3.0)
    return coeff * phi * phi * integral


def _visc_factor(state: State, bg: BackgroundField) -> np.ndarray:
    rho = bg.rho_bar + state.phi
    check_positive(rho)
    return state.phi / (rho * bg.rho_bar)


def nonlinear_f(state: State, bg: BackgroundField) -> np.ndarray:
    """f = -(1/r) d_r(r phi v_r) - d_z(phi v_z)."""
    phi = state.phi
    return -cyl_div(phi * state.v_r, phi * state.v_z, bg.grid)


def nonlinear_g(state: State, bg: BackgroundField, q_form: str = "taylor") -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    grid = bg.grid
    p = bg.params
    r = grid.r
    phi, vr, vt, vz = state.data
    c = _visc_factor(state, bg)
    q = q_term(phi, bg.rho_bar, p.gamma, p.A, form=q_form)
    div = cyl_div(vr, vz, grid)

    dr_vr, dz_vr = d_r(vr, grid), d_z(vr, grid)
    dr_vt, dz_vt = d_r(vt, grid), d_z(vt, grid)
    dr_vz, dz_vz = d_r(vz, grid), d_z(vz, grid)

    g1 = (
        vt * vt / r
        - vr * dr_vr
        - vz * dz_vr
        - d_r(q, grid)
        - p.nu1 * c * visc_swirl(vr, grid)
        - p.nu2 * c * d_r(div, grid)
    )
    g2 = -vr * dr_vt - vz * dz_vt - vt * vr / r - p.nu1 * c * visc_swirl(vt, grid)
    # axial viscous bracket carries (1/r) d_r v_z, matching the primitive axial equation
    g3 = (
        -vr * dr_vz
        - vz * dz_vz
        - d_z(q, grid)
        - p.nu1 * c * visc_axial(vz, grid)
        - p.nu2 * c * d_z(div, grid)
    )
    return g1, g2, g3


def apply_velocity_bc(vel: np.ndarray, grid: Grid) -> None:
    """Zero velocity-like arrays (shape (..., n_r, n_z)) on the Dirichlet boundaries, in place."""
    vel[..., 0, :] = 0.0
    vel[..., -1, :] = 0.0
    if grid.spec.z_boundary == DIRICHLET:
        vel[..., :, 0] = 0.0
        vel[..., :, -1] = 0.0


def linear_rhs(state: State, bg: BackgroundField) -> np.ndarray:
    grid = bg.grid
    p = bg.params
    r = grid.r
    rb = bg.rho_bar
    phi, vr, vt, vz = state.data
    ag = p.A * p.gamma
    pg = bg.rho_bar_gm2 * phi
    div = cyl_div(vr, vz, grid)

    out = np.empty((4,) + grid.shape)
    out[0] = -cyl_div(rb * vr, rb * vz, grid)
    out[1] = (
        (2.0 * p.M0) / (r * r) * vt
        - ag * d_r(pg, grid)
        + p.nu1 / rb * visc_swirl(vr, grid)
        + p.nu2 / rb * d_r(div, grid)
    )
    out[2] = p.nu1 / rb * visc_swirl(vt, grid)
    out[3] = -ag * d_z(pg, grid) + p.nu1 / rb * visc_axial(vz, grid) + p.nu2 / rb * d_z(div, grid)
    return out


def rhs_parts(state: State, bg: BackgroundField, linearized: bool = False, q_form: str = "taylor"):
    """Return (full tendency array, f, (g1, g2, g3)); f and g are None when linearized."""
    bg.grid.check(*state.data)
    check_positive(bg.rho_bar + state.phi)
    out = linear_rhs(state, bg)
    f = g = None
    if not linearized:
        f = nonlinear_f(state, bg)
        g = nonlinear_g(state, bg, q_form=q_form)
        out[0] += f
        out[1] += g[0]
        out[2] += g[1]
        out[3] += g[2]
    apply_velocity_bc(out[1:], bg.grid)
    check_finite(out, "tendency")
    return out, f, g


def rhs_perturbation(state: State, bg: BackgroundField, linearized: bool = False, q_form: str = "taylor") -> Tendency:
    """Time derivative of the perturbation; the wall velocity tendency is exactly zero."""
    out, _, _ = rhs_parts(state, bg, linearized=linearized, q_form=q_form)
    return Tendency(out)


def rhs_primitive(rho, u_r, u_theta, u_z, params: FlowParams, grid: Grid) -> np.ndarray:
    """Time derivatives of (rho, u_r, u_theta, u_z) in primitive form, momentum divided by rho.

    Velocity tendencies on Dirichlet boundaries are zero (no-slip data is held fixed).
    """
    grid.check(rho, u_r, u_theta, u_z)
    check_positive(rho, "primitive density")
    p = params
    r = grid.r
    div = cyl_div(u_r, u_z, grid)
    pressure = p.A * np.power(rho, p.gamma)

    out = np.empty((4,) + grid.shape)
    out[0] = -cyl_div(rho * u_r, rho * u_z, grid)
    out[1] = (
        -(u_r * d_r(u_r, grid) + u_z * d_z(u_r, grid) - u_theta * u_theta / r)
        - d_r(pressure, grid) / rho
        + p.nu1 / rho * visc_swirl(u_r, grid)
        + p.nu2 / rho * d_r(div, grid)
    )
    out[2] = -(u_r * d_r(u_theta, grid) + u_z * d_z(u_theta, grid) + u_theta * u_r / r) + p.nu1 / rho * visc_swirl(
        u_theta, grid
    )
    out[3] = (
        -(u_r * d_r(u_z, grid) + u_z * d_z(u_z, grid))
        - d_z(pressure, grid) / rho
        + p.nu1 / rho * visc_axial(u_z, grid)
        + p.nu2 / rho * d_z(div, grid)
    )
    apply_velocity_bc(out[1:], grid)
    check_finite(out, "primitive tendency")
    return out


def formulation_residual(state: State, bg: BackgroundField, q_form: str = "taylor") -> np.ndarray:
    """rhs_primitive(bg + pert) - rhs_primitive(bg) - rhs_perturbation(pert), per component."""
    grid = bg.grid
    p = bg.params
    rb = np.ascontiguousarray(bg.rho_bar)
    ut = np.ascontiguousarray(bg.u_theta_bar)
    zero = np.zeros(grid.shape)
    full = rhs_primitive(rb + state.phi, state.v_r, ut + state.v_theta, state.v_z, p, grid)
    base = rhs_primitive(rb, zero, ut, zero, p, grid)
    pert = rhs_perturbation(state, bg, q_form=q_form).data
    return full - base - pert


def bump_profile(grid: Grid, center: tuple[float, float], widths: tuple[float, float]) -> np.ndarray:
    """Gaussian exp(-((r-r0)/sr)^2 - ((z-z0)/sz)^2) times the cutoff (1 - s^2)^4, s = elliptic radius / 5."""
    r0, z0 = center
    sr, sz = widths
    R, Z = grid.mesh()
    xr = (R - r0) / sr
    xz = (Z - z0) / sz
    s2 = (xr * xr + xz * xz) / 25.0
    cut = np.where(s2 < 1.0, (1.0 - np.minimum(s2, 1.0)) ** 4, 0.0)
    return np.exp(-(xr * xr) - (xz * xz)) * cut


def make_bump_ic(
    amplitude: float,
    center: tuple[float, float],
    widths: tuple[float, float],
    grid: Grid,
    which: Iterable[str] = COMPONENTS,
) -> State:
    """Compactly supported bump of height ``amplitude`` in the selected components."""
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude}")
    r0, z0 = center
    sr, sz = widths
    if sr <= 0 or sz <= 0:
        raise ValueError(f"bump widths must be positive, got {widths}")
    spec = grid.spec
    if r0 - 5 * sr < 1.0 or r0 + 5 * sr > spec.r_max or z0 - 5 * sz < spec.z_min or z0 + 5 * sz > spec.z_max:
        raise ValueError(
            f"bump support (5 widths around {center}) leaves the domain "
            f"[1, {spec.r_max}] x [{spec.z_min}, {spec.z_max}]"
        )
    which = tuple(which)
    unknown = set(which) - set(COMPONENTS)
    if unknown:
        raise ValueError(f"unknown components {sorted(unknown)}; choose from {COMPONENTS}")
    shape = amplitude * bump_profile(grid, center, widths)
    state = State.zeros(grid)
    for k, name in enumerate(COMPONENTS):
        if name in which:
            state.data[k] = shape
    apply_velocity_bc(state.data[1:], grid)
    return state
