"""Grid primitives: metric/index mapping, occupancy rasters, and the lifted
safety field with quadrilinear interpolation (periodic heading axis)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfDomain

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the lifted position x heading x time domain.

    Nodes are cell-centered: node (ix, iy) sits at origin + (ix, iy) * resolution.
    Heading samples are theta_j = 2*pi*j/n_theta, uniform and periodic.
    """

    nx: int
    ny: int
    resolution: float
    origin: tuple[float, float] = (0.0, 0.0)
    n_theta: int = 1
    n_t: int = 1
    dt_field: float = 1.0

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ValueError("nx, ny must be >= 3")
        if self.n_theta < 1 or self.n_t < 1:
            raise ValueError("n_theta, n_t must be >= 1")
        if self.resolution <= 0:
            raise ValueError("resolution must be > 0")
        if self.dt_field <= 0:
            raise ValueError("dt_field must be > 0")

    @property
    def theta_step(self) -> float:
        return TWO_PI / self.n_theta

    @property
    def theta_values(self) -> np.ndarray:
        return np.arange(self.n_theta) * self.theta_step

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) spanned by the node centers."""
        ox, oy = self.origin
        return (ox, ox + (self.nx - 1) * self.resolution,
                oy, oy + (self.ny - 1) * self.resolution)

    def world_to_grid(self, p) -> tuple:
        """Affine map to fractional indices; no clamping."""
        px, py = p[0], p[1]
        return ((np.asarray(px) - self.origin[0]) / self.resolution,
                (np.asarray(py) - self.origin[1]) / self.resolution)

    def grid_to_world(self, ix, iy) -> tuple:
        return (self.origin[0] + np.asarray(ix) * self.resolution,
                self.origin[1] + np.asarray(iy) * self.resolution)

    def spatial(self) -> "GridSpec":
        """Spatial-only copy (n_theta = n_t = 1)."""
        return GridSpec(self.nx, self.ny, self.resolution, self.origin)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids (nx, ny) of node world coordinates."""
        xs = self.origin[0] + np.arange(self.nx) * self.resolution
        ys = self.origin[1] + np.arange(self.ny) * self.resolution
        return np.meshgrid(xs, ys, indexing="ij")


def wrap_angle(theta: float) -> float:
    """Wrap to [0, 2*pi). fmod is exact, so wrapping is periodicity-safe."""
    w = math.fmod(theta, TWO_PI)
    if w < 0.0:
        w += TWO_PI
    return 0.0 if w >= TWO_PI else w  # -eps + 2*pi rounds to 2*pi exactly


def wrap_error(delta: float) -> float:
    """Shortest signed angle difference in (-pi, pi]."""
    w = math.fmod(delta, TWO_PI)
    if w > math.pi:
        w -= TWO_PI
    elif w <= -math.pi:
        w += TWO_PI
    return w


@dataclass(frozen=True)
class OccupancyGrid:
    """Boolean raster over the spatial grid; True = occupied (unsafe)."""

    spec: GridSpec
    cells: np.ndarray

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=bool)
        object.__setattr__(self, "cells", cells)
        if cells.shape != (self.spec.nx, self.spec.ny):
            raise ValueError("cells shape does not match spec")
        if not (cells[0, :].all() and cells[-1, :].all()
                and cells[:, 0].all() and cells[:, -1].all()):
            raise ValueError("border cells must be occupied")

    @property
    def free(self) -> np.ndarray:
        return ~self.cells


@dataclass(frozen=True)
class ScalarField:
    """Real-valued raster sharing an occupancy grid's spatial layout."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.spec.nx, self.spec.ny):
            raise ValueError("values shape does not match spec")
        if not np.isfinite(vals).all():
            raise ValueError("values must be finite")


def _axis_locate(f, n):
    """Cell index and weight under the half-open [lo, hi) convention.

    The top node belongs to the last cell so the domain edge stays valid.
    """
    i0 = np.minimum(np.floor(f).astype(np.int64), n - 2)
    i0 = np.maximum(i0, 0)
    return i0, f - i0


@dataclass(frozen=True)
class LiftedSafetyField:
    """4-D safety values indexed (ix, iy, itheta, it), with slice 0 at t0."""

    spec: GridSpec
    values: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        expected = (self.spec.nx, self.spec.ny, self.spec.n_theta, self.spec.n_t)
        if vals.shape != expected:
            raise ValueError(f"values shape {vals.shape} != {expected}")

    @property
    def t_max(self) -> float:
        return self.t0 + (self.spec.n_t - 1) * self.spec.dt_field

    def _locate(self, x, y, theta, t, eps=1e-9):
        sp = self.spec
        fx, fy = sp.world_to_grid((x, y))
        if np.any(fx < -eps) or np.any(fx > sp.nx - 1 + eps) \
                or np.any(fy < -eps) or np.any(fy > sp.ny - 1 + eps):
            raise OutOfDomain("position outside grid extent")
        ft = (np.asarray(t, dtype=float) - self.t0) / sp.dt_field
        if np.any(ft < -eps) or np.any(ft > sp.n_t - 1 + eps):
            raise OutOfDomain("time outside slice range")
        fx = np.clip(fx, 0.0, sp.nx - 1)
        fy = np.clip(fy, 0.0, sp.ny - 1)
        ft = np.clip(ft, 0.0, max(sp.n_t - 1, 0))
        theta = np.asarray(theta, dtype=float)
        wrapped = np.fmod(theta, TWO_PI)  # fmod is exact, so wrap is periodicity-safe
        wrapped = np.where(wrapped < 0.0, wrapped + TWO_PI, wrapped)
        fth = wrapped / sp.theta_step

        ix, wx = _axis_locate(fx, sp.nx)
        iy, wy = _axis_locate(fy, sp.ny)
        if sp.n_t > 1:
            it, wt = _axis_locate(ft, sp.n_t)
        else:
            it, wt = np.zeros_like(ix), np.zeros_like(fx, dtype=float)
        if sp.n_theta > 1:
            j0 = np.floor(fth).astype(np.int64) % sp.n_theta
            wth = np.asarray(fth) - np.floor(fth)
            j1 = (j0 + 1) % sp.n_theta
        else:
            j0 = np.zeros_like(ix)
            j1 = j0
            wth = np.zeros_like(fx, dtype=float)
        return ix, iy, j0, j1, it, wx, wy, wth, wt

    def _corners(self, ix, iy, j0, j1, it):
        """The 16 corner values, stacked along a leading axis (dx,dy,dth,dt)."""
        v = self.values
        it1 = np.minimum(it + 1, self.spec.n_t - 1)
        out = np.empty((2, 2, 2, 2) + np.shape(ix))
        for a in (0, 1):
            for b in (0, 1):
                for c, j in ((0, j0), (1, j1)):
                    for d, k in ((0, it), (1, it1)):
                        out[a, b, c, d] = v[ix + a, iy + b, j, k]
        return out

    def sample(self, x, y, theta, t):
        """Quadrilinear interpolation; exact at sample nodes.

        Bilinear in (x, y), linear in theta with periodic wrap, linear in t.
        Raises OutOfDomain outside the extent or slice range (clamping of t
        is the caller's explicit responsibility).
        """
        ix, iy, j0, j1, it, wx, wy, wth, wt = self._locate(x, y, theta, t)
        c = self._corners(ix, iy, j0, j1, it)
        cx = c[0] * (1 - wx) + c[1] * wx
        cy = cx[0] * (1 - wy) + cx[1] * wy
        cth = cy[0] * (1 - wth) + cy[1] * wth
        out = cth[0] * (1 - wt) + cth[1] * wt
        return float(out) if np.ndim(out) == 0 else out

    def gradient(self, x, y, theta, t):
        """Analytic (d/dx, d/dy, d/dtheta) of the interpolant at the query.

        On cell faces the derivative of the containing cell is returned under
        the half-open [lo, hi) convention. Units: 1/m, 1/m, 1/rad.
        """
        sp = self.spec
        ix, iy, j0, j1, it, wx, wy, wth, wt = self._locate(x, y, theta, t)
        c = self._corners(ix, iy, j0, j1, it)
        # collapse t first, then differentiate the remaining trilinear form
        ct = c[:, :, :, 0] * (1 - wt) + c[:, :, :, 1] * wt
        # ct indexed (dx, dy, dth)
        def collapse(arr, w, axis):
            sl0 = [slice(None)] * arr.ndim
            sl1 = [slice(None)] * arr.ndim
            sl0[axis], sl1[axis] = 0, 1
            return arr[tuple(sl0)] * (1 - w) + arr[tuple(sl1)] * w

        d_x = collapse(collapse(ct[1] - ct[0], wy, 0), wth, 0) / sp.resolution
        d_y = collapse(collapse(ct[:, 1] - ct[:, 0], wx, 0), wth, 0) / sp.resolution
        if sp.n_theta > 1:
            d_th = collapse(collapse(ct[:, :, 1] - ct[:, :, 0], wx, 0), wy, 0) / sp.theta_step
        else:
            d_th = np.zeros_like(np.asarray(d_x))
        if np.ndim(d_x) == 0:
            return float(d_x), float(d_y), float(d_th)
        return d_x, d_y, d_th

    def slice_2d(self, j: int, k: int) -> np.ndarray:
        return self.values[:, :, j, k]
