import numpy as np
import pytest

from circflow import FlowParams, build_background, build_grid, rhs_perturbation
from circflow.mms import (
    ConvergenceStudy,
    ManufacturedCase,
    ZeroCase,
    convergence_study,
    manufactured_forcing,
    read_study_csv,
    run_manufactured,
)


@pytest.fixture(scope="module")
def case():
    return ManufacturedCase()


@pytest.mark.parametrize("kind", ["discrete", "analytic"])
def test_zero_case_forcing_bitwise_zero(kind):
    zc = ZeroCase()
    grid = build_grid(zc.grid_spec(32))
    assert np.all(manufactured_forcing(zc, 0.3, grid, kind=kind) == 0.0)


@pytest.mark.parametrize("kind", ["discrete", "analytic"])
def test_forcing_deterministic(case, kind):
    grid = build_grid(case.grid_spec(32))
    a = manufactured_forcing(case, 0.37, grid, kind=kind)
    b = manufactured_forcing(case, 0.37, grid, kind=kind)
    assert np.array_equal(a, b)


def test_steady_case_forcing_is_minus_rhs():
    steady = ManufacturedCase(omega=0.0)
    grid = build_grid(steady.grid_spec(32))
    bg = build_background(grid, steady.params)
    forcing = manufactured_forcing(steady, 0.0, grid, bg)
    assert np.all(forcing + rhs_perturbation(steady.exact(grid, 0.0), bg).data == 0.0)


def test_exact_solution_satisfies_wall_condition(case):
    grid = build_grid(case.grid_spec(32))
    u = case.exact(grid, 0.2).data
    assert np.all(u[1:, 0, :] == 0.0) and np.all(u[1:, -1, :] == 0.0)


def test_analytic_forcing_consistent_with_discrete(case):
    # the two forcings differ by the truncation error of the discrete rhs
    diffs = []
    for n in (32, 64, 128):
        grid = build_grid(case.grid_spec(n))
        bg = build_background(grid, case.params)
        d = manufactured_forcing(case, 0.1, grid, bg, "analytic") - manufactured_forcing(case, 0.1, grid, bg, "discrete")
        diffs.append(np.sqrt(np.sum(grid.quad_weights * grid.r * d**2)))
    assert np.log2(diffs[0] / diffs[1]) > 1.8 and np.log2(diffs[1] / diffs[2]) > 1.8


def test_forcing_matters(case):
    forced = run_manufactured(case, 32, 0.25, "analytic")
    free = run_manufactured(case, 32, 0.25, None)
    for k in forced:
        assert free[k] >= 10 * forced[k]


def test_discrete_forcing_tracks_solution_to_time_error(case):
    err = run_manufactured(case, 32, 0.25, "discrete")
    assert max(err.values()) < 1e-7


def test_ladder_validation(case):
    with pytest.raises(ValueError, match="at least 3"):
        convergence_study(case, (32, 64))
    with pytest.raises(ValueError, match="double"):
        convergence_study(case, (32, 48, 96))


def test_unknown_forcing_kind(case):
    grid = build_grid(case.grid_spec(32))
    with pytest.raises(ValueError):
        manufactured_forcing(case, 0.0, grid, kind="fourier")


def test_study_csv_roundtrip():
    study = ConvergenceStudy(
        ladder=[32, 64, 128],
        errors={c: [1e-3, 2.5e-4, 6.2e-5] for c in ("phi", "v_r", "v_theta", "v_z")},
        slopes={c: 2.0049 for c in ("phi", "v_r", "v_theta", "v_z")},
        monotone=True,
    )
    rows = read_study_csv(study.to_csv())
    assert len(rows) == 12
    assert rows[0] == {"grid": 32, "component": "phi", "error": 1e-3, "slope": 2.0049}
    assert study.conclusive and study.min_slope() == 2.0049


def test_nonmonotone_marked_inconclusive():
    study = ConvergenceStudy([32, 64, 128], {"phi": [1.0, 2.0, 0.5]}, {"phi": 0.5}, monotone=False)
    assert not study.conclusive
