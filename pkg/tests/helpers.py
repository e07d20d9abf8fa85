"""Shared test utilities: independent oracles and scene builders.

Everything here is deliberately implemented differently from the library
code it checks (brute force, enumeration, closed forms), so agreement is
evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from poisson_safety.grid import GridSpec, LiftedSafetyField, OccupancyGrid


# ---------------------------------------------------------------------------
# occupancy scene builders


def bordered(cells: np.ndarray) -> np.ndarray:
    out = cells.copy()
    out[0, :] = out[-1, :] = True
    out[:, 0] = out[:, -1] = True
    return out


def make_occ(nx, ny, resolution, cells=None, origin=(0.0, 0.0)) -> OccupancyGrid:
    spec = GridSpec(nx, ny, resolution, origin)
    if cells is None:
        cells = np.zeros((nx, ny), dtype=bool)
    return OccupancyGrid(spec, bordered(np.asarray(cells, dtype=bool)))


def random_occupancy(rng, nx=64, ny=64, resolution=0.05,
                     density=(0.10, 0.40)) -> OccupancyGrid:
    """Random rectangular blobs until obstacle density lands in range."""
    lo, hi = density
    target = rng.uniform(lo, hi)
    cells = np.zeros((nx, ny), dtype=bool)
    interior = (nx - 2) * (ny - 2)
    for _ in range(200):
        inner = cells[1:-1, 1:-1]
        if inner.sum() / interior >= target:
            break
        w = int(rng.integers(2, max(3, nx // 6)))
        h = int(rng.integers(2, max(3, ny // 6)))
        i = int(rng.integers(1, nx - 1 - w))
        j = int(rng.integers(1, ny - 1 - h))
        cells[i:i + w, j:j + h] = True
    return OccupancyGrid(GridSpec(nx, ny, resolution), bordered(cells))


def disk_problem(resolution: float, radius: float = 1.0, side: float = 2.56):
    """Unit-disk Dirichlet problem with the analytic solution R^2 - r^2.

    Returns (occ, boundary_cut, exact, free). boundary_cut holds the exact
    sub-cell distances from each free cell center to the circle along the
    four stencil arms, in cell units.
    """
    n = int(round(side / resolution)) + 1
    spec = GridSpec(n, n, resolution, (0.0, 0.0))
    c = (n - 1) * resolution / 2.0
    X, Y = spec.cell_centers()
    r2 = (X - c) ** 2 + (Y - c) ** 2
    occ = OccupancyGrid(spec, bordered(r2 >= radius ** 2))
    free = occ.free

    cut = np.ones((n, n, 4))
    ii, jj = np.nonzero(free)
    x, y = X[ii, jj], Y[ii, jj]
    for d, (dx, dy) in enumerate([(1, 0), (-1, 0), (0, 1), (0, -1)]):
        if dx:
            disc = np.maximum(radius ** 2 - (y - c) ** 2, 0.0)
            dist = (c + dx * np.sqrt(disc) - x) * dx / resolution
        else:
            disc = np.maximum(radius ** 2 - (x - c) ** 2, 0.0)
            dist = (c + dy * np.sqrt(disc) - y) * dy / resolution
        cut[ii, jj, d] = np.clip(dist, 1e-3, 1.0)
    exact = np.where(free, radius ** 2 - r2, 0.0)
    return occ, cut, exact, free


def lift_scalar(occ: OccupancyGrid, values: np.ndarray, n_theta=1, n_t=1,
                dt_field=1.0, t0=0.0) -> LiftedSafetyField:
    """Broadcast one 2-D raster into a constant lifted field."""
    base = occ.spec
    spec = GridSpec(base.nx, base.ny, base.resolution, base.origin,
                    n_theta, n_t, dt_field)
    stack = np.repeat(np.repeat(values[:, :, None, None], n_theta, axis=2),
                      n_t, axis=3)
    return LiftedSafetyField(spec, stack, t0)


# ---------------------------------------------------------------------------
# scalar red-black Gauss-Seidel reference (matches the njit kernel's order)


def reference_red_black_sweeps(values, free, rhs, omega, sweeps):
    """Plain-python red-black SOR: color 0 = (i + j) even, natural order per
    color, identical update order to the production kernel."""
    v = values.copy()
    nx, ny = v.shape
    for _ in range(sweeps):
        for color in range(2):
            for i in range(1, nx - 1):
                j0 = 1 if (i + 1) % 2 == color else 2
                for j in range(j0, ny - 1, 2):
                    if free[i, j]:
                        r = (v[i + 1, j] + v[i - 1, j] + v[i, j + 1]
                             + v[i, j - 1] - 4.0 * v[i, j] - rhs)
                        v[i, j] += omega * 0.25 * r
    return v


# ---------------------------------------------------------------------------
# brute-force Minkowski dilation


def brute_force_buffer(cells: np.ndarray, kernel) -> np.ndarray:
    """out[p] = OR over kernel offsets o of cells[p + o], by direct loops."""
    nx, ny = cells.shape
    out = np.zeros_like(cells)
    offs = kernel.offsets()
    for i in range(nx):
        for j in range(ny):
            for oi, oj in offs:
                pi, pj = i + oi, j + oj
                if 0 <= pi < nx and 0 <= pj < ny and cells[pi, pj]:
                    out[i, j] = True
                    break
    return bordered(out)


def exact_collision_kernel(shape, theta: float, resolution: float,
                           subdiv: int = 10):
    """Offsets o such that the shape placed at the origin collides with an
    occupied cell at offset o, per the pointwise oracle's two clauses
    (occupied center inside shape, or shape subsample inside the cell).

    Computed by dense sub-resolution sampling, independently of the
    library's rasterizer. Returns a boolean (2k+1, 2k+1) mask plus k.
    """
    import shapely

    poly = shape.as_shapely(theta)
    half = int(math.ceil(shape.bounding_radius() / resolution)) + 1
    offs = np.arange(-half, half + 1)
    # clause 1: cell center inside the shape
    cx, cy = np.meshgrid(offs * resolution, offs * resolution, indexing="ij")
    mask = shapely.intersects_xy(poly, cx.ravel(), cy.ravel()) \
        .reshape(cx.shape)
    # clause 2: any interior subsample of the shape falls inside the cell
    step = resolution / subdiv
    minx, miny, maxx, maxy = poly.bounds
    sx = np.arange(minx, maxx + step / 2, step)
    sy = np.arange(miny, maxy + step / 2, step)
    gx, gy = np.meshgrid(sx, sy, indexing="ij")
    inside = shapely.contains_xy(poly, gx.ravel(), gy.ravel())
    px, py = gx.ravel()[inside], gy.ravel()[inside]
    ci = np.rint(px / resolution).astype(int)
    cj = np.rint(py / resolution).astype(int)
    keep = (np.abs(ci) <= half) & (np.abs(cj) <= half)
    mask[ci[keep] + half, cj[keep] + half] = True
    return mask, half


def oracle_collision_map(occ: OccupancyGrid, shape, theta: float) -> np.ndarray:
    """Boolean map: pose at cell (i, j), heading theta, collides per the
    continuum oracle. Vectorized as a dilation of the occupancy by the
    point-reflected exact-collision kernel."""
    from scipy import ndimage

    mask, half = exact_collision_kernel(shape, theta, occ.spec.resolution)
    # pose p collides iff occ[p + o] for some colliding offset o:
    # dilation by the point-reflected mask (symmetric center anchor)
    return ndimage.binary_dilation(occ.cells, structure=mask[::-1, ::-1])


# ---------------------------------------------------------------------------
# QP oracles


def active_set_qp_oracle(H, g, A=None, lower=None, upper=None, tol=1e-8):
    """Global minimizer by active-set enumeration.

    Tries every subset of rows clamped to one of its finite bounds, solves
    the equality-constrained KKT system, and returns the first candidate
    satisfying full KKT (feasibility + dual signs) — which for a convex QP
    is the global optimum. Returns (x, objective) or (None, inf) if no
    candidate verifies (infeasible or numerically degenerate).
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float).ravel()
    n = g.size
    if A is None or np.size(A) == 0:
        x, *_ = np.linalg.lstsq(H, -g, rcond=None)
        return x, 0.5 * x @ H @ x + g @ x
    A = np.atleast_2d(np.asarray(A, dtype=float))
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    m = A.shape[0]

    def feasible(x):
        z = A @ x
        return (np.all(z >= lower - tol) and np.all(z <= upper + tol))

    def kkt_ok(x, rows, sides):
        grad = H @ x + g
        if not rows:
            return np.abs(grad).max(initial=0.0) <= tol, x
        Ar = A[list(rows)]
        lam, res, *_ = np.linalg.lstsq(Ar.T, -grad, rcond=None)
        if np.abs(Ar.T @ lam + grad).max(initial=0.0) > 1e-6:
            return False, x
        for k, s in zip(lam, sides):
            # convention: H x + g + A' y = 0, y >= 0 upper-active,
            # y <= 0 lower-active; equality rows (s == 2) carry any sign
            if s == 1 and k < -tol:
                return False, x
            if s == -1 and k > tol:
                return False, x
        return True, x

    best = (None, np.inf)
    for size in range(min(n, m) + 1):
        for rows in itertools.combinations(range(m), size):
            side_opts = []
            for r in rows:
                if np.isfinite(lower[r]) and lower[r] == upper[r]:
                    opts = [2]          # equality row: dual sign free
                else:
                    opts = []
                    if np.isfinite(lower[r]):
                        opts.append(-1)
                    if np.isfinite(upper[r]):
                        opts.append(+1)
                    if not opts:
                        opts = [0]
                side_opts.append(opts)
            for sides in itertools.product(*side_opts):
                if 0 in sides:
                    continue
                b = np.array([lower[r] if s != 1 else upper[r]
                              for r, s in zip(rows, sides)])
                k = len(rows)
                kkt = np.zeros((n + k, n + k))
                kkt[:n, :n] = H
                if k:
                    kkt[:n, n:] = A[list(rows)].T
                    kkt[n:, :n] = A[list(rows)]
                rhs = np.concatenate([-g, b])
                sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
                x = sol[:n]
                if not feasible(x):
                    continue
                ok, x = kkt_ok(x, list(rows), sides)
                if ok:
                    return x, float(0.5 * x @ H @ x + g @ x)
                obj = float(0.5 * x @ H @ x + g @ x)
                if obj < best[1]:
                    best = (x, obj)
    return best


def random_feasible_qp(rng, n_max=6, m_max=8):
    """Random PSD QP with rows anchored around a known feasible point, so
    generated instances are primal feasible by construction."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    B = rng.normal(size=(n, n))
    H = B @ B.T
    if rng.random() < 0.3:
        # PSD-singular: project out a random direction; keep g in range(H)
        # so the objective stays bounded below along the null space
        u = rng.normal(size=n)
        u /= np.linalg.norm(u)
        H = H - np.outer(H @ u, u) - np.outer(u, u @ H) \
            + np.outer(u, u) * (u @ H @ u)
        H = 0.5 * (H + H.T)
        g = H @ rng.normal(size=n)
    else:
        g = rng.normal(size=n)
    A = rng.normal(size=(m, n))
    xf = rng.normal(size=n)
    z = A @ xf
    lower = z - rng.uniform(0.05, 2.0, size=m)
    upper = z + rng.uniform(0.05, 2.0, size=m)
    for r in range(m):
        p = rng.random()
        if p < 0.2:
            lower[r] = -np.inf
        elif p < 0.4:
            upper[r] = np.inf
        elif p < 0.5:
            # exactly at the anchor so stacked equality rows stay consistent
            lower[r] = upper[r] = z[r]
    return H, g, A, lower, upper


def heading_allocation_oracle(omega, beta0, lam, dt, wa_min, wa_max):
    """Eq-elimination closed form, derived independently: minimize over
    w_beta first (unconstrained quadratic), clamp the reduced 1-D problem
    in w_alpha to its box."""
    # cost(wa, wb) = (wa + wb - omega)^2 + lam (beta0 + wb dt)^2
    # dC/dwb = 0  =>  wb*(wa) = (omega - wa - lam dt beta0) / (1 + lam dt^2)
    denom = 1.0 + lam * dt * dt

    def wb_star(wa):
        return (omega - wa - lam * dt * beta0) / denom

    def cost(wa):
        wb = wb_star(wa)
        return (wa + wb - omega) ** 2 + lam * (beta0 + wb * dt) ** 2

    # reduced cost is convex quadratic in wa; find its vertex numerically
    # from three samples (exact for a quadratic)
    c0, c1, c2 = cost(-1.0), cost(0.0), cost(1.0)
    a = 0.5 * (c0 + c2) - c1
    b = 0.5 * (c2 - c0)
    wa = -b / (2.0 * a) if a > 1e-15 else 0.0
    wa = min(max(wa, wa_min), wa_max)
    return wa, wb_star(wa), cost(wa)
