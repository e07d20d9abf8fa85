"""Occupancy forecasting and lifted-field assembly.

Per-obstacle constant velocities are estimated from consecutive occupancy
frames by centroid tracking; future occupancy is predicted by whole-cell
translation of each component; the lifted field is built by one buffered
Poisson solve per (heading, time) slice.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import FootprintShape, buffer_safe_set, rasterize_footprint
from .grid import GridSpec, LiftedSafetyField, OccupancyGrid, ScalarField
from .poisson import SolveReport, SolverParams, solve_poisson

_FOUR_CONN = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class ObstacleTrack:
    component_id: int
    centroid: tuple[float, float]
    velocity: tuple[float, float]
    cell_count: int

    def __post_init__(self):
        if self.cell_count < 1:
            raise ValueError("cell_count must be >= 1")
        if not np.isfinite(self.velocity).all():
            raise ValueError("velocity must be finite")


@dataclass(frozen=True)
class LiftedBuildParams:
    n_theta: int = 16
    n_t: int = 6
    dt_field: float = 0.1
    footprint: FootprintShape = FootprintShape.disk(0.1)
    # controllers want informative negative values inside obstacles
    solver: SolverParams = SolverParams(exterior_mode="mirrored-negative")

    def __post_init__(self):
        if self.n_theta < 1 or self.n_t < 1:
            raise ValueError("n_theta, n_t must be >= 1")
        if self.dt_field <= 0:
            raise ValueError("dt_field must be > 0")


@dataclass
class LiftedBuildReport:
    slice_reports: dict
    worst_residual: float
    all_converged: bool
    total_iterations: int
    wall_time: float


def _label_components(occ: OccupancyGrid):
    """Label 4-connected obstacle components; ids touching the border ring
    are background (the workspace frame and anything attached to it)."""
    labels, count = ndimage.label(occ.cells, structure=_FOUR_CONN)
    border_ids = set(np.unique(labels[0, :])) | set(np.unique(labels[-1, :])) \
        | set(np.unique(labels[:, 0])) | set(np.unique(labels[:, -1]))
    border_ids.discard(0)
    return labels, count, border_ids


def _centroid_world(occ: OccupancyGrid, labels, lab: int):
    ii, jj = np.nonzero(labels == lab)
    cx = occ.spec.origin[0] + ii.mean() * occ.spec.resolution
    cy = occ.spec.origin[1] + jj.mean() * occ.spec.resolution
    return float(cx), float(cy), ii.size


def estimate_velocities(prev: OccupancyGrid, cur: OccupancyGrid,
                        dt: float) -> list[ObstacleTrack]:
    """Track 4-connected obstacle components between frames.

    Components are matched greedily by ascending centroid distance; unmatched
    current components get zero velocity, and displacements below half a cell
    snap to zero. Border-connected cells form zero-velocity background tracks.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if prev.spec != cur.spec:
        raise ValueError("frames must share a grid spec")
    labels_c, count_c, border_c = _label_components(cur)
    labels_p, count_p, border_p = _label_components(prev)

    tracks: list[ObstacleTrack] = []
    movable_c = [lab for lab in range(1, count_c + 1) if lab not in border_c]
    movable_p = [lab for lab in range(1, count_p + 1) if lab not in border_p]
    cents_c = {lab: _centroid_world(cur, labels_c, lab) for lab in movable_c}
    cents_p = {lab: _centroid_world(prev, labels_p, lab) for lab in movable_p}

    pairs = sorted(
        ((np.hypot(cents_c[lc][0] - cents_p[lp][0],
                   cents_c[lc][1] - cents_p[lp][1]), lc, lp)
         for lc in movable_c for lp in movable_p),
        key=lambda t: t[0])
    matched_c, matched_p = set(), set()
    velocity = {}
    for dist, lc, lp in pairs:
        if lc in matched_c or lp in matched_p:
            continue
        matched_c.add(lc)
        matched_p.add(lp)
        if dist < cur.spec.resolution / 2.0:
            velocity[lc] = (0.0, 0.0)
        else:
            velocity[lc] = ((cents_c[lc][0] - cents_p[lp][0]) / dt,
                            (cents_c[lc][1] - cents_p[lp][1]) / dt)
    for lab in movable_c:
        cx, cy, n = cents_c[lab]
        tracks.append(ObstacleTrack(lab, (cx, cy),
                                    velocity.get(lab, (0.0, 0.0)), n))
    for lab in sorted(border_c):
        cx, cy, n = _centroid_world(cur, labels_c, lab)
        tracks.append(ObstacleTrack(lab, (cx, cy), (0.0, 0.0), n))
    return tracks


def predict_occupancy(cur: OccupancyGrid, tracks, tau: float) -> OccupancyGrid:
    """Translate each tracked component by round(v * tau / resolution) cells.

    Cells leaving the grid are dropped, the border frame is re-imposed, and
    overlapping translated components union.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    labels, count, border_ids = _label_components(cur)
    vel = {t.component_id: t.velocity for t in tracks}
    res = cur.spec.resolution
    out = np.zeros_like(cur.cells)
    for lab in range(1, count + 1):
        v = vel.get(lab, (0.0, 0.0))
        di = int(round(v[0] * tau / res))
        dj = int(round(v[1] * tau / res))
        mask = labels == lab
        if di == 0 and dj == 0:
            out |= mask
        else:
            out |= _shift_mask(mask, di, dj)
    out[0, :] = out[-1, :] = True
    out[:, 0] = out[:, -1] = True
    return OccupancyGrid(cur.spec, out)


def _shift_mask(mask: np.ndarray, di: int, dj: int) -> np.ndarray:
    nx, ny = mask.shape
    out = np.zeros_like(mask)
    if abs(di) >= nx or abs(dj) >= ny:
        return out
    src_i = slice(max(0, -di), min(nx, nx - di))
    dst_i = slice(max(0, di), min(nx, nx + di))
    src_j = slice(max(0, -dj), min(ny, ny - dj))
    dst_j = slice(max(0, dj), min(ny, ny + dj))
    out[dst_i, dst_j] = mask[src_i, src_j]
    return out


def build_lifted_field(cur: OccupancyGrid, tracks,
                       params: LiftedBuildParams,
                       warm: LiftedSafetyField | None = None,
                       t0: float = 0.0):
    """Assemble h over (x, y, theta, t) by independent per-slice solves.

    Slice (j, k) solves the Poisson problem on the occupancy predicted to
    k * dt_field, buffered by the footprint at heading theta_j, optionally
    warm-started from the same slice of a previous field. Returns
    (LiftedSafetyField, LiftedBuildReport).
    """
    t_start = time.perf_counter()
    base = cur.spec
    spec = GridSpec(base.nx, base.ny, base.resolution, base.origin,
                    params.n_theta, params.n_t, params.dt_field)
    values = np.empty((spec.nx, spec.ny, spec.n_theta, spec.n_t))
    kernels = [rasterize_footprint(params.footprint, th, spec.resolution)
               for th in spec.theta_values]
    reports: dict[tuple[int, int], SolveReport] = {}
    worst = 0.0
    total_iters = 0
    all_ok = True
    for k in range(spec.n_t):
        occ_k = predict_occupancy(cur, tracks, k * params.dt_field)
        for j in range(spec.n_theta):
            occ_jk = buffer_safe_set(occ_k, kernels[j])
            warm_slice = None
            if warm is not None and warm.values.shape == values.shape:
                # align by absolute time: the old field's slice nearest
                # t0 + k*dt_field predicts the same instant
                k_old = int(round((t0 + k * params.dt_field - warm.t0)
                                  / params.dt_field))
                k_old = min(max(k_old, 0), spec.n_t - 1)
                warm_slice = ScalarField(base, warm.values[:, :, j, k_old])
            fld, rep = solve_poisson(occ_jk, params.solver, warm_slice)
            values[:, :, j, k] = fld.values
            reports[(j, k)] = rep
            worst = max(worst, rep.final_residual)
            total_iters += rep.iterations
            all_ok = all_ok and rep.converged
    field = LiftedSafetyField(spec, values, t0)
    report = LiftedBuildReport(reports, worst, all_ok, total_iters,
                               time.perf_counter() - t_start)
    return field, report
