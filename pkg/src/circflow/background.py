"""Steady circulatory background flow around the unit cylinder.

The steady state is pure swirl, u = (0, M0 / r, 0), with the density
balancing the centrifugal force:

    rho_bar(r) = (rho0^(g-1) + (g-1) M0^2 / (2 A g) * (1 - 1/r^2)) ** (1/(g-1))

It increases monotonically from rho0 at the wall to a finite far-field value,
and d_r rho_bar = M0^2 rho_bar^(2-g) / (A g r^3) decays like r^-3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import Grid, cyl_div, d_r


@dataclass(frozen=True)
class FlowParams:
    """Gas law P = A rho^gamma, viscosities and wall data."""

    A: float = 1.0
    gamma: float = 1.4
    nu1: float = 0.1
    nu2: float = 0.0
    rho_bar0: float = 1.0
    M0: float = 1.0

    def __post_init__(self):
        if not self.A > 0:
            raise ValueError(f"A > 0 required, got {self.A}")
        if not self.gamma > 1:
            raise ValueError(f"gamma > 1 required, got {self.gamma}")
        if not self.nu1 > 0:
            raise ValueError(f"nu1 > 0 required, got {self.nu1}")
        if not self.nu1 + self.nu2 > 0:
            raise ValueError(f"nu1 + nu2 > 0 required, got nu1={self.nu1}, nu2={self.nu2}")
        if not self.rho_bar0 > 0:
            raise ValueError(f"rho_bar0 > 0 required, got {self.rho_bar0}")
        if not self.M0 > 0:
            raise ValueError(f"M0 > 0 required, got {self.M0}")

    @property
    def swirl_coeff(self) -> float:
        """(gamma - 1) M0^2 / (2 A gamma)."""
        return (self.gamma - 1.0) * self.M0**2 / (2.0 * self.A * self.gamma)

    @property
    def rho_inf(self) -> float:
        """Far-field density lim_{r -> inf} rho_bar(r)."""
        return float(self.rho_bar0 * _root1p(self.swirl_coeff / self.rho_bar0 ** (self.gamma - 1.0), self.gamma))


def power(x, p: float):
    """x**p with exact short-circuits for p in {0, 1}."""
    if p == 0.0:
        return np.ones_like(np.asarray(x, dtype=np.float64))
    if p == 1.0:
        return np.asarray(x, dtype=np.float64) * 1.0
    return np.power(x, p)


def _root1p(x, gamma: float):
    # (1 + x) ** (1 / (gamma - 1)); gamma = 2 is linear, gamma = 3 a square root
    x = np.asarray(x, dtype=np.float64)
    if gamma == 2.0:
        return 1.0 + x
    if gamma == 3.0:
        return np.sqrt(1.0 + x)
    return np.exp(np.log1p(x) / (gamma - 1.0))


def _check_radius(r):
    r = np.asarray(r, dtype=np.float64)
    if np.any(r < 1.0) or np.any(np.isnan(r)):
        raise ValueError("background is defined only for r >= 1")
    return r


def bar_rho(r, params: FlowParams):
    r = _check_radius(r)
    # rho_bar0 * (1 + x)^(1/(gamma-1)) is exactly rho_bar0 at the wall and never below it
    x = params.swirl_coeff / params.rho_bar0 ** (params.gamma - 1.0) * (1.0 - 1.0 / (r * r))
    return params.rho_bar0 * _root1p(x, params.gamma)


def bar_rho_prime(r, params: FlowParams):
    r = _check_radius(r)
    rho = bar_rho(r, params)
    return params.M0**2 * power(rho, 2.0 - params.gamma) / (params.A * params.gamma * r**3)


def bar_utheta(r, params: FlowParams):
    r = _check_radius(r)
    return params.M0 / r


@dataclass(frozen=True, eq=False)
class BackgroundField:
    """Background quantities tabulated on every node of a grid (read-only arrays)."""

    grid: Grid
    params: FlowParams
    rho_bar: np.ndarray
    rho_bar_prime: np.ndarray
    rho_bar_gm2: np.ndarray
    u_theta_bar: np.ndarray
    sound_sq: np.ndarray
    radial: dict = field(repr=False, default_factory=dict)


def build_background(grid: Grid, params: FlowParams) -> BackgroundField:
    r = grid.r_nodes
    g = params.gamma
    rho = bar_rho(r, params)
    cols = {
        "rho_bar": rho,
        "rho_bar_prime": bar_rho_prime(r, params),
        "rho_bar_gm2": power(rho, g - 2.0),
        "u_theta_bar": bar_utheta(r, params),
        "sound_sq": g * params.A * power(rho, g - 1.0),
    }
    full = {}
    for name, col in cols.items():
        arr = np.broadcast_to(col[:, None], grid.shape)
        full[name] = arr
    return BackgroundField(grid=grid, params=params, radial=cols, **full)


def background_residual(grid: Grid, params: FlowParams) -> dict[str, float]:
    """Discrete L2_r norms of the three steady equations evaluated on the background.

    Continuity and theta-momentum are evaluated in the divergence form in which
    the steady system is written, so they vanish to round-off; the r-momentum
    balance d_r P(rho_bar) = rho_bar u_theta^2 / r is pure truncation error.
    """
    from .diagnostics import weighted_lp

    bg = build_background(grid, params)
    rho = np.ascontiguousarray(bg.rho_bar)
    ut = np.ascontiguousarray(bg.u_theta_bar)
    ur = np.zeros(grid.shape)
    r = grid.r

    continuity = cyl_div(rho * ur, np.zeros(grid.shape), grid)
    pressure = params.A * np.power(rho, params.gamma)
    r_mom = (
        rho * (ur * d_r(ur, grid) - ut * ut / r)
        + d_r(pressure, grid)
        - (params.nu1 + params.nu2) * d_r(d_r(r * ur, grid) / r, grid)
    )
    theta_mom = rho * (ur * d_r(ut, grid) + ut * ur / r) - params.nu1 * d_r(d_r(r * ut, grid) / r, grid)
    return {
        "continuity": weighted_lp(continuity, grid, alpha=1, p=2),
        "r_momentum": weighted_lp(r_mom, grid, alpha=1, p=2),
        "theta_momentum": weighted_lp(theta_mom, grid, alpha=1, p=2),
    }


__all__ = [
    "FlowParams",
    "BackgroundField",
    "bar_rho",
    "bar_rho_prime",
    "bar_utheta",
    "build_background",
    "background_residual",
]
