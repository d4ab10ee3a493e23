"""Numerical laboratory for perturbations of viscous circulatory flow around a cylinder."""

from .background import FlowParams, BackgroundField, bar_rho, bar_rho_prime, bar_utheta, build_background
from .operators import GridSpec, Grid, build_grid, set_num_threads
from .dynamics import State, Tendency, make_bump_ic, rhs_perturbation, rhs_primitive
from .timestepper import StepControl, evolve, rk4_step, stable_dt
from .diagnostics import EnergyReport, TimeSeries, energy_report, n_functional, theorem_ratio

__version__ = "0.1.0"
