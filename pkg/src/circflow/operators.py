"""Structured (r, z) grid and the cylindrical finite-difference operators.

The radial direction uses an exponential map from a uniform computational
coordinate xi in [0, 1]:

    r(xi) = 1 + (r_max - 1) * (exp(beta * xi) - 1) / (exp(beta) - 1)

so nodes cluster near the wall r = 1 for beta > 0 (beta = 0 is the uniform
map).  Derivatives are second-order centered differences in xi composed with
the analytic metric; the end nodes use one-sided second-order stencils.

Fields are plain ``float64`` arrays of shape ``(n_r, n_z)`` (index ``[i, j]``
is node ``(r_i, z_j)``).

Thread parallelism is optional (:func:`set_num_threads`).  Work is split into
slabs orthogonal to the differentiated axis, so every output node is computed
by exactly the same arithmetic whatever the split; results are bitwise
independent of the thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

PERIODIC = "periodic"
DIRICHLET = "dirichlet"

_num_threads = 1
_pool: ThreadPoolExecutor | None = None


def set_num_threads(n: int) -> None:
    """Set the number of worker threads used by the stencil operators."""
    global _num_threads, _pool
    n = int(n)
    if n < 1:
        raise ValueError(f"thread count must be >= 1, got {n}")
    if n != _num_threads and _pool is not None:
        _pool.shutdown(wait=True)
        _pool = None
    _num_threads = n


def get_num_threads() -> int:
    return _num_threads


def _executor() -> ThreadPoolExecutor:
    global _pool
    if _pool is None:
        _pool = ThreadPoolExecutor(max_workers=_num_threads)
    return _pool


def _split_apply(kernel: Callable[[np.ndarray], np.ndarray], f: np.ndarray, split_axis: int) -> np.ndarray:
    """Apply ``kernel`` slab-wise along ``split_axis`` (kernel must be local in that axis)."""
    n = _num_threads
    size = f.shape[split_axis]
    if n <= 1 or size < 2 * n:
        return kernel(f)
    out = np.empty(f.shape, dtype=np.float64)
    bounds = np.linspace(0, size, n + 1).astype(int)

    def work(k: int) -> None:
        sl = [slice(None)] * f.ndim
        sl[split_axis] = slice(bounds[k], bounds[k + 1])
        sl = tuple(sl)
        out[sl] = kernel(f[sl])

    futures = [_executor().submit(work, k) for k in range(1, n)]
    work(0)
    for fut in futures:
        fut.result()
    return out


@dataclass(frozen=True)
class GridSpec:
    """Mesh parameters for the truncated exterior domain [1, r_max] x [z_min, z_max]."""

    n_r: int = 128
    n_z: int = 128
    r_max: float = 21.0
    z_min: float = -10.0
    z_max: float = 10.0
    beta: float = 1.0
    z_boundary: str = PERIODIC

    def __post_init__(self):
        if int(self.n_r) != self.n_r or self.n_r < 16:
            raise ValueError(f"n_r >= 16 required, got {self.n_r}")
        if int(self.n_z) != self.n_z or self.n_z < 16:
            raise ValueError(f"n_z >= 16 required, got {self.n_z}")
        if not self.r_max > 1.0:
            raise ValueError(f"r_max > 1 required, got {self.r_max}")
        if not self.z_max > self.z_min:
            raise ValueError(f"z_max > z_min required, got [{self.z_min}, {self.z_max}]")
        if not self.beta >= 0.0:
            raise ValueError(f"beta >= 0 required, got {self.beta}")
        if self.z_boundary not in (PERIODIC, DIRICHLET):
            raise ValueError(f"z_boundary must be 'periodic' or 'dirichlet', got {self.z_boundary!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_r, self.n_z)

    def refined(self, n_r: int, n_z: int | None = None) -> "GridSpec":
        from dataclasses import replace

        return replace(self, n_r=n_r, n_z=n_r if n_z is None else n_z)


def radial_map(xi, r_max: float, beta: float):
    """Exponential stretching map and its first two xi-derivatives."""
    xi = np.asarray(xi, dtype=np.float64)
    if beta == 0.0:
        r = 1.0 + (r_max - 1.0) * xi
        r_xi = np.full_like(xi, r_max - 1.0)
        return r, r_xi, np.zeros_like(xi)
    scale = (r_max - 1.0) / math.expm1(beta)
    r = 1.0 + scale * np.expm1(beta * xi)
    r_xi = scale * beta * np.exp(beta * xi)
    return r, r_xi, beta * r_xi


@dataclass(frozen=True, eq=False)
class Grid:
    spec: GridSpec
    r_nodes: np.ndarray
    z_nodes: np.ndarray
    dr_dxi: np.ndarray
    d2r_dxi2: np.ndarray
    dxi: float
    dz: float
    # derived, broadcast-ready
    r: np.ndarray = field(repr=False)
    quad_weights: np.ndarray = field(repr=False)
    dr_local: np.ndarray = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.spec.shape

    @property
    def periodic(self) -> bool:
        return self.spec.z_boundary == PERIODIC

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.r_nodes, self.z_nodes, indexing="ij")

    def check(self, *fields: np.ndarray) -> None:
        for f in fields:
            if np.shape(f) != self.shape:
                raise ValueError(f"field shape {np.shape(f)} does not match grid shape {self.shape}")


def build_grid(spec: GridSpec) -> Grid:
    n_r, n_z = spec.n_r, spec.n_z
    xi = np.arange(n_r) / (n_r - 1)
    r, r_xi, r_xixi = radial_map(xi, spec.r_max, spec.beta)
    r[0] = 1.0
    r[-1] = spec.r_max

    length = spec.z_max - spec.z_min
    if spec.z_boundary == PERIODIC:
        dz = length / n_z
        z = spec.z_min + dz * np.arange(n_z)
        wz = np.full(n_z, dz)
    else:
        dz = length / (n_z - 1)
        z = spec.z_min + dz * np.arange(n_z)
        z[-1] = spec.z_max
        wz = np.full(n_z, dz)
        wz[0] = wz[-1] = 0.5 * dz

    # trapezoid in physical r
    gaps = np.diff(r)
    wr = np.zeros(n_r)
    wr[:-1] += 0.5 * gaps
    wr[1:] += 0.5 * gaps

    dr_local = np.empty(n_r)
    dr_local[1:-1] = np.minimum(gaps[1:], gaps[:-1])
    dr_local[0] = gaps[0]
    dr_local[-1] = gaps[-1]

    return Grid(
        spec=spec,
        r_nodes=r,
        z_nodes=z,
        dr_dxi=r_xi,
        d2r_dxi2=r_xixi,
        dxi=1.0 / (n_r - 1),
        dz=dz,
        r=r[:, None],
        quad_weights=np.outer(wr, wz),
        dr_local=dr_local,
    )


# -- 1-D kernels along axis 0 / axis 1 -------------------------------------


def _d1_axis0(f: np.ndarray, h: float) -> np.ndarray:
    # end stencils written in differences so constants are annihilated exactly
    out = np.empty(f.shape)
    out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
    out[0] = (3.0 * (f[1] - f[0]) - (f[2] - f[1])) / (2.0 * h)
    out[-1] = (3.0 * (f[-1] - f[-2]) - (f[-2] - f[-3])) / (2.0 * h)
    return out


def _d2_axis0(f: np.ndarray, h: float) -> np.ndarray:
    # 4-point one-sided ends (2, -5, 4, -1) keep the boundary rows second order
    out = np.empty(f.shape)
    h2 = h * h
    out[1:-1] = ((f[2:] - f[1:-1]) - (f[1:-1] - f[:-2])) / h2
    out[0] = (-2.0 * (f[1] - f[0]) + 3.0 * (f[2] - f[1]) - (f[3] - f[2])) / h2
    out[-1] = (-2.0 * (f[-2] - f[-1]) + 3.0 * (f[-3] - f[-2]) - (f[-4] - f[-3])) / h2
    return out


def _d1_axis1_periodic(f: np.ndarray, h: float) -> np.ndarray:
    return (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2.0 * h)


def _d2_axis1_periodic(f: np.ndarray, h: float) -> np.ndarray:
    return ((np.roll(f, -1, axis=1) - f) - (f - np.roll(f, 1, axis=1))) / (h * h)


def _require_shape(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape != grid.shape:
        raise ValueError(f"field shape {f.shape} does not match grid shape {grid.shape}")
    return f


# -- public operators ------------------------------------------------------


def d_r(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = _require_shape(f, grid)
    inv = (1.0 / grid.dr_dxi)[:, None]
    h = grid.dxi
    return _split_apply(lambda s: _d1_axis0(s, h) * inv, f, split_axis=1)


def d_rr(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = _require_shape(f, grid)
    h = grid.dxi
    inv2 = (1.0 / grid.dr_dxi**2)[:, None]
    curv = (grid.d2r_dxi2 / grid.dr_dxi)[:, None]
    if grid.spec.beta == 0.0:
        return _split_apply(lambda s: _d2_axis0(s, h) * inv2, f, split_axis=1)
    return _split_apply(lambda s: (_d2_axis0(s, h) - curv * _d1_axis0(s, h)) * inv2, f, split_axis=1)


def d_z(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = _require_shape(f, grid)
    h = grid.dz
    if grid.periodic:
        return _split_apply(lambda s: _d1_axis1_periodic(s, h), f, split_axis=0)
    return _split_apply(lambda s: _d1_axis0(s.T, h).T, f, split_axis=0)


def d_zz(f: np.ndarray, grid: Grid) -> np.ndarray:
    f = _require_shape(f, grid)
    h = grid.dz
    if grid.periodic:
        return _split_apply(lambda s: _d2_axis1_periodic(s, h), f, split_axis=0)
    return _split_apply(lambda s: _d2_axis0(s.T, h).T, f, split_axis=0)


def cyl_div(v_r: np.ndarray, v_z: np.ndarray, grid: Grid) -> np.ndarray:
    """(1/r) d_r(r v_r) + d_z v_z, expanded as d_r v_r + v_r / r + d_z v_z."""
    grid.check(v_r, v_z)
    return d_r(v_r, grid) + v_r / grid.r + d_z(v_z, grid)


def visc_swirl(w: np.ndarray, grid: Grid) -> np.ndarray:
    """d_r((1/r) d_r(r w)) + d_zz w, expanded as w_rr + w_r / r - w / r^2 + w_zz."""
    r = grid.r
    return d_rr(w, grid) + d_r(w, grid) / r - w / (r * r) + d_zz(w, grid)


def visc_axial(w: np.ndarray, grid: Grid) -> np.ndarray:
    """w_rr + w_r / r + w_zz."""
    return d_rr(w, grid) + d_r(w, grid) / grid.r + d_zz(w, grid)


def check_finite(f: np.ndarray, name: str = "field") -> None:
    if not np.all(np.isfinite(f)):
        bad = np.argwhere(~np.isfinite(f))[0]
        raise FloatingPointError(f"non-finite value in {name} at index {tuple(int(k) for k in bad)}")
