"""Robot footprints, heading-dependent rasterization, and safe-set buffering.

Buffering erodes free space by the rasterized footprint so that a free cell
guarantees the whole robot body fits; rasterization is conservative (a cell
is set when its res x res square can touch the shape).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import shapely
from scipy import ndimage
from shapely.affinity import rotate as shp_rotate, translate as shp_translate
from shapely.geometry import Point, Polygon, box

from .errors import DegenerateShape, OutOfDomain
from .grid import OccupancyGrid

_ELLIPSE_SEGMENTS = 128


@dataclass(frozen=True)
class FootprintShape:
    """Robot occupancy relative to its centroid: ellipse(a, b) or polygon."""

    kind: str
    a: float = 0.0
    b: float = 0.0
    vertices: tuple = ()

    @staticmethod
    def ellipse(a: float, b: float) -> "FootprintShape":
        return FootprintShape("ellipse", a=float(a), b=float(b))

    @staticmethod
    def disk(r: float) -> "FootprintShape":
        return FootprintShape.ellipse(r, r)

    @staticmethod
    def polygon(vertices) -> "FootprintShape":
        verts = tuple((float(x), float(y)) for x, y in vertices)
        return FootprintShape("polygon", vertices=verts)

    @staticmethod
    def rectangle(length: float, width: float) -> "FootprintShape":
        hx, hy = length / 2.0, width / 2.0
        return FootprintShape.polygon(
            [(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)])

    def validate(self) -> None:
        if self.kind == "ellipse":
            if not (self.a > 0 and self.b > 0):
                raise DegenerateShape("ellipse semi-axes must be > 0")
        elif self.kind == "polygon":
            if len(self.vertices) < 3:
                raise DegenerateShape("polygon needs >= 3 vertices")
            poly = Polygon(self.vertices)
            if not poly.is_valid or not poly.is_simple:
                raise DegenerateShape("polygon must be simple")
            if not poly.covers(Point(0.0, 0.0)):
                raise DegenerateShape("polygon must contain the origin")
        else:
            raise DegenerateShape(f"unknown footprint kind {self.kind!r}")

    def is_disk(self) -> bool:
        return self.kind == "ellipse" and self.a == self.b

    def bounding_radius(self) -> float:
        if self.kind == "ellipse":
            return max(self.a, self.b)
        return max(math.hypot(x, y) for x, y in self.vertices)

    def as_shapely(self, theta: float = 0.0, at=(0.0, 0.0)):
        """Shapely polygon of the shape rotated by theta, placed at `at`.

        Ellipses use a circumscribed polygon so the approximation contains
        the true ellipse (conservative).
        """
        if self.kind == "ellipse":
            scale = 1.0 / math.cos(math.pi / _ELLIPSE_SEGMENTS)
            angles = np.linspace(0.0, 2.0 * math.pi, _ELLIPSE_SEGMENTS,
                                 endpoint=False)
            pts = np.column_stack((self.a * scale * np.cos(angles),
                                   self.b * scale * np.sin(angles)))
            poly = Polygon(pts)
        else:
            poly = Polygon(self.vertices)
        if theta:
            poly = shp_rotate(poly, theta, origin=(0.0, 0.0), use_radians=True)
        if at[0] or at[1]:
            poly = shp_translate(poly, at[0], at[1])
        return poly

    def to_json(self) -> dict:
        if self.kind == "ellipse":
            return {"kind": "ellipse", "a": self.a, "b": self.b}
        return {"kind": "polygon", "vertices": [list(v) for v in self.vertices]}

    @staticmethod
    def from_json(obj: dict) -> "FootprintShape":
        if obj.get("kind") == "ellipse":
            shape = FootprintShape.ellipse(obj["a"], obj["b"])
        elif obj.get("kind") == "polygon":
            shape = FootprintShape.polygon(obj["vertices"])
        else:
            raise DegenerateShape(f"unknown footprint kind {obj.get('kind')!r}")
        shape.validate()
        return shape


@dataclass(frozen=True)
class Kernel:
    """Boolean footprint raster at a fixed heading; anchor = centroid cell."""

    cells: np.ndarray
    anchor: tuple[int, int]
    resolution: float

    def __post_init__(self):
        cells = np.ascontiguousarray(self.cells, dtype=bool)
        object.__setattr__(self, "cells", cells)
        ax, ay = self.anchor
        if not (0 <= ax < cells.shape[0] and 0 <= ay < cells.shape[1]):
            raise ValueError("anchor must lie inside the raster")
        if not cells.any():
            raise ValueError("kernel must contain at least one cell")

    def offsets(self) -> np.ndarray:
        """(k, 2) integer cell offsets of set cells relative to the anchor."""
        ii, jj = np.nonzero(self.cells)
        return np.column_stack((ii - self.anchor[0], jj - self.anchor[1]))


@lru_cache(maxsize=512)
def _rasterize_cached(shape: FootprintShape, theta: float, resolution: float) -> Kernel:
    shape.validate()
    half = int(math.ceil(shape.bounding_radius() / resolution)) + 1
    offs = np.arange(-half, half + 1)
    if shape.is_disk():
        # exact Euclidean half-cell padding; matches the distance-transform
        # threshold r + resolution/2
        d2 = offs[:, None] ** 2 + offs[None, :] ** 2
        limit = (shape.a + resolution / 2.0) / resolution
        cells = d2 <= limit * limit
    else:
        poly = shape.as_shapely(theta)
        cells = np.zeros((offs.size, offs.size), dtype=bool)
        half_res = resolution / 2.0
        minx, miny, maxx, maxy = poly.bounds
        for i, oi in enumerate(offs):
            cx = oi * resolution
            if cx + half_res < minx or cx - half_res > maxx:
                continue
            for j, oj in enumerate(offs):
                cy = oj * resolution
                if cy + half_res < miny or cy - half_res > maxy:
                    continue
                cell = box(cx - half_res, cy - half_res,
                           cx + half_res, cy + half_res)
                cells[i, j] = poly.intersects(cell)
    # trim to tight bounding box
    ii, jj = np.nonzero(cells)
    i0, i1 = ii.min(), ii.max()
    j0, j1 = jj.min(), jj.max()
    return Kernel(cells[i0:i1 + 1, j0:j1 + 1], (half - i0, half - j0), resolution)


def rasterize_footprint(shape: FootprintShape, theta: float,
                        resolution: float) -> Kernel:
    """Conservative raster of the footprint rotated by theta.

    A cell is set when it can touch the shape: disks use the exact
    center-distance test with half-cell padding, other shapes intersect the
    full cell square against the (rotated) outline.
    """
    if resolution <= 0:
        raise ValueError("resolution must be > 0")
    return _rasterize_cached(shape, float(theta), float(resolution))


def buffer_safe_set(occ: OccupancyGrid, kernel: Kernel) -> OccupancyGrid:
    """Minkowski buffering: dilate the obstacle set by the point-reflected
    kernel (equivalently erode free space by the footprint).

    Output cell p is occupied iff occ[p + o] for some kernel offset o.
    """
    if not math.isclose(kernel.resolution, occ.spec.resolution,
                        rel_tol=0, abs_tol=1e-12):
        raise ValueError("kernel and occupancy resolutions differ")
    out = _dilate_by_offsets(occ.cells, kernel)
    out[0, :] = out[-1, :] = True
    out[:, 0] = out[:, -1] = True
    return OccupancyGrid(occ.spec, out)


def _dilate_by_offsets(cells: np.ndarray, kernel: Kernel) -> np.ndarray:
    # out[p] = OR_o cells[p + o] for kernel offsets o relative to the anchor;
    # this is binary dilation by the point-reflected kernel. The reflected
    # kernel is padded so its anchor sits on the exact center cell, which
    # keeps scipy's origin handling out of the picture.
    struct = _center_structure(kernel.cells[::-1, ::-1],
                               (kernel.cells.shape[0] - 1 - kernel.anchor[0],
                                kernel.cells.shape[1] - 1 - kernel.anchor[1]))
    return ndimage.binary_dilation(cells, structure=struct)


def _center_structure(struct, anchor):
    """Pad so the anchor lands on the exact center cell."""
    kx, ky = struct.shape
    ax, ay = anchor
    half_x = max(ax, kx - 1 - ax)
    half_y = max(ay, ky - 1 - ay)
    out = np.zeros((2 * half_x + 1, 2 * half_y + 1), dtype=bool)
    out[half_x - ax:half_x - ax + kx, half_y - ay:half_y - ay + ky] = struct
    return out


def collision_check(occ: OccupancyGrid, shape: FootprintShape, pose) -> bool:
    """Exact-up-to-subsampling collision oracle (test/audit use only).

    True iff any occupied cell center lies inside the posed shape, or any
    shape-interior sample on a 10x sub-resolution lattice falls inside an
    occupied cell.
    """
    x, y, theta = pose
    spec = occ.spec
    xmin, xmax, ymin, ymax = spec.extent
    if not (xmin <= x <= xmax and ymin <= y <= ymax):
        raise OutOfDomain("pose position outside grid extent")
    shape.validate()
    res = spec.resolution
    poly = shape.as_shapely(theta, at=(x, y))
    minx, miny, maxx, maxy = poly.bounds

    # clause 1: occupied cell centers inside the posed shape
    i0 = max(0, int(math.floor((minx - spec.origin[0]) / res)))
    i1 = min(spec.nx - 1, int(math.ceil((maxx - spec.origin[0]) / res)))
    j0 = max(0, int(math.floor((miny - spec.origin[1]) / res)))
    j1 = min(spec.ny - 1, int(math.ceil((maxy - spec.origin[1]) / res)))
    if i0 <= i1 and j0 <= j1:
        sub = occ.cells[i0:i1 + 1, j0:j1 + 1]
        if sub.any():
            ii, jj = np.nonzero(sub)
            cx = spec.origin[0] + (ii + i0) * res
            cy = spec.origin[1] + (jj + j0) * res
            if shapely.intersects_xy(poly, cx, cy).any():
                return True

    # clause 2: shape-interior samples at 10x sub-resolution in occupied cells
    step = res / 10.0
    sx = np.arange(minx, maxx + step / 2, step)
    sy = np.arange(miny, maxy + step / 2, step)
    gx, gy = np.meshgrid(sx, sy, indexing="ij")
    inside = shapely.contains_xy(poly, gx.ravel(), gy.ravel())
    px = gx.ravel()[inside]
    py = gy.ravel()[inside]
    if px.size == 0:
        return False
    ci = np.rint((px - spec.origin[0]) / res).astype(int)
    cj = np.rint((py - spec.origin[1]) / res).astype(int)
    ok = (ci >= 0) & (ci < spec.nx) & (cj >= 0) & (cj < spec.ny)
    return bool(occ.cells[ci[ok], cj[ok]].any())
