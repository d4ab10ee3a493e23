import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from circflow.operators import (
    DIRICHLET,
    GridSpec,
    build_grid,
    cyl_div,
    d_r,
    d_rr,
    d_z,
    d_zz,
    radial_map,
    set_num_threads,
    visc_axial,
    visc_swirl,
)

import oracles

betas = st.sampled_from([0.0, 0.5, 1.0, 2.0])


def l2(err, grid):
    return np.sqrt(np.sum(grid.quad_weights * err**2))


def test_uniform_map_nodes():
    grid = build_grid(GridSpec(n_r=16, n_z=16, r_max=3.0, beta=0.0))
    small = radial_map(np.array([0.0, 0.5, 1.0]), 3.0, 0.0)[0]
    assert np.array_equal(small, [1.0, 2.0, 3.0])
    assert grid.r_nodes[0] == 1.0 and grid.r_nodes[-1] == 3.0


@given(betas, st.integers(16, 200), st.floats(2.0, 100.0))
def test_map_endpoints_exact(beta, n, r_max):
    grid = build_grid(GridSpec(n_r=n, n_z=16, r_max=r_max, beta=beta))
    assert grid.r_nodes[0] == 1.0
    assert grid.r_nodes[-1] == r_max
    assert np.all(np.diff(grid.r_nodes) > 0)


def test_stretching_ratio():
    n, beta = 65, 2.0
    grid = build_grid(GridSpec(n_r=n, n_z=16, r_max=21.0, beta=beta))
    dr = np.diff(grid.r_nodes)
    assert dr[-1] / dr[0] == pytest.approx(np.exp(beta * (n - 2) / (n - 1)), rel=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [{"n_r": 8}, {"n_z": 3}, {"r_max": 1.0}, {"z_min": 1.0, "z_max": 0.0}, {"beta": -0.5}, {"z_boundary": "open"}],
)
def test_invalid_spec(kwargs):
    with pytest.raises(ValueError):
        GridSpec(**kwargs)


def test_shape_mismatch_rejected():
    grid = build_grid(GridSpec(n_r=16, n_z=16))
    with pytest.raises(ValueError):
        d_r(np.zeros((16, 17)), grid)
    with pytest.raises(ValueError):
        cyl_div(np.zeros((16, 16)), np.zeros((17, 16)), grid)


@given(betas, st.sampled_from(["periodic", DIRICHLET]), st.floats(-5, 5))
def test_constants_annihilated(beta, zb, c):
    grid = build_grid(GridSpec(n_r=24, n_z=20, beta=beta, z_boundary=zb))
    f = np.full(grid.shape, c)
    for op in (d_r, d_rr, d_z, d_zz, visc_axial):
        assert np.all(op(f, grid) == 0.0)


def test_exact_on_low_order_polynomials():
    grid = build_grid(GridSpec(n_r=33, n_z=16, r_max=5.0, beta=0.0))
    R, _ = grid.mesh()
    assert np.allclose(d_r(R, grid), 1.0, rtol=0, atol=1e-13)
    assert np.allclose(cyl_div(R, np.zeros(grid.shape), grid), 2.0, rtol=0, atol=1e-12)
    assert np.all(cyl_div(np.zeros(grid.shape), np.full(grid.shape, 3.0), grid) == 0.0)
    assert np.allclose(visc_swirl(R, grid), 0.0, rtol=0, atol=1e-12)
    assert np.allclose(visc_swirl(R**2, grid), 3.0, rtol=0, atol=1e-11)
    assert np.allclose(visc_axial(R**2, grid), 4.0, rtol=0, atol=1e-11)
    assert np.all(visc_axial(np.full(grid.shape, 2.5), grid) == 0.0)


@pytest.mark.parametrize("beta", [0.0, 1.0])
def test_linear_in_mapped_coordinate_exact(beta):
    grid = build_grid(GridSpec(n_r=40, n_z=16, beta=beta))
    xi = np.linspace(0.0, 1.0, 40)[:, None] * np.ones((1, 16))
    # d_r xi = 1 / r_xi exactly for a linear function of xi
    assert np.allclose(d_r(xi, grid), 1.0 / grid.dr_dxi[:, None], rtol=1e-12, atol=0)


def _order(errs):
    return np.log2(errs[0] / errs[1]), np.log2(errs[1] / errs[2])


@pytest.mark.parametrize("beta", [0.0, 1.0])
@pytest.mark.parametrize("zb", ["periodic", DIRICHLET])
def test_derivative_convergence(beta, zb):
    errs = {k: [] for k in ("r", "rr", "z", "zz")}
    for n in (32, 64, 128):
        grid = build_grid(GridSpec(n_r=n, n_z=n, r_max=11.0, z_min=0.0, z_max=8.0, beta=beta, z_boundary=zb))
        R, Z = grid.mesh()
        f, fr, frr, fz, fzz = oracles.smooth_test_function(R, Z, 8.0)
        errs["r"].append(l2(d_r(f, grid) - fr, grid))
        errs["rr"].append(l2(d_rr(f, grid) - frr, grid))
        errs["z"].append(l2(d_z(f, grid) - fz, grid))
        errs["zz"].append(l2(d_zz(f, grid) - fzz, grid))
    for k, e in errs.items():
        assert min(_order(e)) >= 1.9, (k, e)


def test_periodic_dzz_sine_order():
    errs = []
    L = 20.0
    for n in (32, 64, 128):
        grid = build_grid(GridSpec(n_r=16, n_z=n, z_min=-10, z_max=10))
        _, Z = grid.mesh()
        k = 2 * np.pi / L
        f = np.sin(k * Z)
        exact = -(k**2) * f
        errs.append(np.linalg.norm(d_zz(f, grid) - exact) / np.linalg.norm(exact))
    for o in _order(errs):
        assert o == pytest.approx(2.0, abs=0.1)


@given(st.integers(1, 6))
def test_periodic_mode_not_mixed(m):
    grid = build_grid(GridSpec(n_r=16, n_z=64, z_min=0.0, z_max=2 * np.pi))
    _, Z = grid.mesh()
    f = np.cos(m * Z)
    g = d_zz(f, grid)
    scale = g[:, 0] / f[:, 0]
    assert np.allclose(g, scale[:, None] * f, rtol=0, atol=1e-10)
    exp = -(2 - 2 * np.cos(m * grid.dz)) / grid.dz**2
    assert np.allclose(scale, exp, rtol=1e-12)


def test_refinement_identities():
    errs = {"div": [], "swirl": [], "axial": []}
    for n in (32, 64, 128):
        grid = build_grid(GridSpec(n_r=n, n_z=16, r_max=6.0))
        R, _ = grid.mesh()
        zero = np.zeros(grid.shape)
        errs["div"].append(l2(cyl_div(1.0 / R, zero, grid), grid))
        errs["swirl"].append(l2(visc_swirl(1.0 / R, grid), grid))
        errs["axial"].append(l2(visc_axial(np.log(R), grid), grid))
    for k, e in errs.items():
        assert min(_order(e)) >= 1.9, (k, e)


def test_compositions_match_definitions(rng):
    grid = build_grid(GridSpec(n_r=32, n_z=24, beta=1.0))
    a, b = rng.standard_normal((2,) + grid.shape)
    r = grid.r
    assert np.max(np.abs(cyl_div(a, b, grid) - (d_r(a, grid) + a / r + d_z(b, grid)))) <= 1e-13
    sw = d_rr(a, grid) + d_r(a, grid) / r - a / r**2 + d_zz(a, grid)
    assert np.max(np.abs(visc_swirl(a, grid) - sw)) <= 1e-13 * np.max(np.abs(sw))
    ax = d_rr(a, grid) + d_r(a, grid) / r + d_zz(a, grid)
    assert np.max(np.abs(visc_axial(a, grid) - ax)) <= 1e-13 * np.max(np.abs(ax))


@given(st.integers(2, 5), st.sampled_from(["periodic", DIRICHLET]))
def test_thread_count_bitwise(nthreads, zb):
    grid = build_grid(GridSpec(n_r=37, n_z=29, beta=1.0, z_boundary=zb))
    f = np.random.default_rng(nthreads).standard_normal(grid.shape)
    ops = (d_r, d_rr, d_z, d_zz, visc_swirl, visc_axial)
    set_num_threads(1)
    ref = [op(f, grid) for op in ops]
    set_num_threads(nthreads)
    out = [op(f, grid) for op in ops]
    set_num_threads(1)
    for a, b in zip(ref, out):
        assert np.array_equal(a, b)


def test_quadrature_weights_exact_for_linear():
    grid = build_grid(GridSpec(n_r=17, n_z=17, r_max=2.0, z_min=0.0, z_max=1.0, beta=0.0, z_boundary=DIRICHLET))
    R, _ = grid.mesh()
    assert np.sum(grid.quad_weights * R) == pytest.approx(oracles.INT_R_UNIT, rel=1e-14)
