"""Binary field dumps (PSF1) and occupancy import (binary PGM)."""

from __future__ import annotations

import struct

import numpy as np

from .grid import GridSpec, LiftedSafetyField, OccupancyGrid

_MAGIC = b"PSF1"
_HEADER = "<4I5d"  # nx, ny, n_theta, n_t; resolution, ox, oy, dt_field, t0


def write_psf1(field: LiftedSafetyField, path) -> None:
    """Little-endian dump: magic, dims, metadata, f32 values (it-major,
    itheta, iy, ix-minor)."""
    sp = field.spec
    header = struct.pack(_HEADER, sp.nx, sp.ny, sp.n_theta, sp.n_t,
                         sp.resolution, sp.origin[0], sp.origin[1],
                         sp.dt_field, field.t0)
    # (ix, iy, itheta, it) -> (it, itheta, iy, ix), C-ravel gives ix-minor
    payload = np.ascontiguousarray(
        field.values.transpose(3, 2, 1, 0), dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(header)
        fh.write(payload)


def read_psf1(path) -> LiftedSafetyField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError("not a PSF1 file")
        head = fh.read(struct.calcsize(_HEADER))
        nx, ny, n_theta, n_t, res, ox, oy, dtf, t0 = struct.unpack(_HEADER, head)
        count = nx * ny * n_theta * n_t
        raw = np.frombuffer(fh.read(4 * count), dtype="<f4", count=count)
    spec = GridSpec(nx, ny, res, (ox, oy), n_theta, n_t, dtf)
    values = raw.reshape(n_t, n_theta, ny, nx).transpose(3, 2, 1, 0)
    return LiftedSafetyField(spec, values.astype(np.float64), t0)


def read_pgm_occupancy(path, resolution: float, origin=(0.0, 0.0)) -> OccupancyGrid:
    """Binary PGM (P5): 0 = occupied, 255 = free; anything else rejected.

    The image row/column layout maps columns to x and rows to y.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    tokens = []
    i = 0
    while len(tokens) < 4 and i < len(data):
        # skip whitespace and comments
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(data) and not data[j:j + 1].isspace():
            j += 1
        tokens.append(data[i:j])
        i = j
    if not tokens or tokens[0] != b"P5":
        raise ValueError("only binary PGM (P5) is supported")
    width, height, maxval = (int(t) for t in tokens[1:4])
    if maxval != 255:
        raise ValueError("PGM maxval must be 255")
    i += 1  # single whitespace after maxval
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=i)
    bad = ~np.isin(raster, (0, 255))
    if bad.any():
        raise ValueError("PGM cells must be 0 (occupied) or 255 (free)")
    img = raster.reshape(height, width)
    cells = (img == 0).T  # -> (nx, ny) with x = column
    spec = GridSpec(width, height, resolution, origin)
    return OccupancyGrid(spec, cells)


def write_pgm_occupancy(occ: OccupancyGrid, path) -> None:
    img = np.where(occ.cells.T, 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (occ.spec.nx, occ.spec.ny))
        fh.write(img.tobytes())
