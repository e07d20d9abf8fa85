"""Embedded dense convex QP solver.

Operator splitting (alternating projection / dual ascent) with an active-set
polish step, chosen for warm-start friendliness at control rates. Solves

    min 1/2 u' H u + g' u   s.t.  lower <= A u <= upper

with H symmetric PSD. Duals follow the convention H x + g + A' y = 0 with
y >= 0 on upper-active rows and y <= 0 on lower-active rows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .errors import InfeasibleProblem

STATUS_OPTIMAL = "optimal"
STATUS_MAX_ITERS = "max-iters"

_SIGMA = 1e-6
_ALPHA = 1.6
_RHO = 0.1
_RHO_EQ_SCALE = 1e3
_KKT_TOL = 1e-6


@dataclass
class QpSolution:
    x: np.ndarray
    y: np.ndarray
    status: str
    iterations: int
    kkt_residual: float


def kkt_residual(H, g, A, lower, upper, x, y) -> float:
    """Max-norm KKT residual: stationarity, primal feasibility,
    complementarity (dual sign violations fold into the latter)."""
    stat = np.abs(H @ x + g + (A.T @ y if A is not None and len(y) else 0.0)).max() \
        if H.size else 0.0
    if A is None or A.shape[0] == 0:
        return float(stat)
    z = A @ x
    prim = max(np.maximum(lower - z, 0.0).max(initial=0.0),
               np.maximum(z - upper, 0.0).max(initial=0.0))
    y_pos = np.maximum(y, 0.0)
    y_neg = np.maximum(-y, 0.0)
    fin_u = np.isfinite(upper)
    fin_l = np.isfinite(lower)
    # a positive multiplier on an infinite bound is a dual violation outright
    comp_u = np.where(fin_u, y_pos * np.where(fin_u, np.abs(upper - z), 0.0),
                      y_pos)
    comp_l = np.where(fin_l, y_neg * np.where(fin_l, np.abs(z - lower), 0.0),
                      y_neg)
    comp = max(comp_u.max(initial=0.0), comp_l.max(initial=0.0))
    return float(max(stat, prim, comp))


def _validate(H, g, A, lower, upper):
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float).ravel()
    n = g.size
    if H.shape != (n, n):
        raise ValueError("H/g dimension mismatch")
    if np.abs(H - H.T).max(initial=0.0) > 1e-10:
        raise ValueError("H must be symmetric (tolerance 1e-10)")
    if n and np.linalg.eigvalsh(0.5 * (H + H.T)).min() < -1e-9:
        raise ValueError("H must be PSD (eigenvalue floor -1e-9)")
    if A is None:
        return H, g, None, None, None
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m = A.shape[0]
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    if A.shape[1] != n or lower.size != m or upper.size != m:
        raise ValueError("constraint dimension mismatch")
    if np.any(lower > upper + 1e-12):
        raise InfeasibleProblem("lower > upper on some row")
    zero_rows = ~A.any(axis=1)
    if np.any(zero_rows & ((lower > 1e-12) | (upper < -1e-12))):
        raise InfeasibleProblem("zero constraint row excludes 0")
    return H, g, A, lower, upper


def _ruiz_scaling(H, g, A, iters=10):
    """Modified Ruiz equilibration of the stacked [H A'; A 0] data.

    Returns (d, e, c): variable scaling, row scaling, cost scaling. The
    scaled problem has variables x_bar = x / d, duals y = e * y_bar / c.
    """
    n = g.size
    m = A.shape[0]
    d = np.ones(n)
    e = np.ones(m)
    c = 1.0
    Hs = H.copy()
    As = A.copy()
    gs = g.copy()
    for _ in range(iters):
        col = np.maximum(np.abs(Hs).max(axis=0, initial=0.0),
                         np.abs(As).max(axis=0, initial=0.0))
        row = np.abs(As).max(axis=1, initial=0.0)
        dd = 1.0 / np.sqrt(np.clip(col, 1e-8, 1e8))
        ee = 1.0 / np.sqrt(np.clip(row, 1e-8, 1e8))
        Hs = (Hs * dd) * dd[:, None]
        gs = gs * dd
        As = (As * dd) * ee[:, None]
        d *= dd
        e *= ee
        # cost scaling keeps the quadratic and linear parts near unit norm
        gamma = max(np.abs(Hs).max(axis=0, initial=0.0).mean(),
                    np.abs(gs).max(initial=0.0), 1e-8)
        Hs /= gamma
        gs /= gamma
        c /= gamma
    return d, e, c


def _polish(H, g, A, lower, upper, x, y):
    """Equality-solve the detected active set; exact when detection is right."""
    act_low = y < -1e-9
    act_up = y > 1e-9
    z = A @ x
    act_low |= z <= lower + 1e-7
    act_up |= z >= upper - 1e-7
    act_up &= np.isfinite(upper)
    act_low &= np.isfinite(lower)
    act_low &= ~act_up  # ties break to upper; equality rows land there
    rows = np.flatnonzero(act_low | act_up)
    n = g.size
    k = rows.size
    b = np.where(act_up[rows], upper[rows], lower[rows])
    kkt = np.zeros((n + k, n + k))
    kkt[:n, :n] = H
    kkt[:n, n:] = A[rows].T
    kkt[n:, :n] = A[rows]
    rhs = np.concatenate([-g, b])
    sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
    x_p = sol[:n]
    y_p = np.zeros_like(y)
    y_p[rows] = sol[n:]
    return x_p, y_p


def solve_qp(H, g, A=None, lower=None, upper=None, *,
             x0=None, y0=None, max_iters=4000) -> QpSolution:
    """Solve the box-constrained QP; KKT residual <= 1e-6 on success.

    Raises InfeasibleProblem when the bounds are inconsistent after
    presolve; otherwise returns the best iterate with status max-iters.
    """
    H, g, A, lower, upper = _validate(H, g, A, lower, upper)
    n = g.size
    if A is None or A.shape[0] == 0:
        x, *_ = np.linalg.lstsq(H + _SIGMA * np.eye(n), -g, rcond=None)
        res = kkt_residual(H, g, None, None, None, x, np.zeros(0))
        if res > _KKT_TOL:
            x, *_ = np.linalg.lstsq(H, -g, rcond=None)
            res = kkt_residual(H, g, None, None, None, x, np.zeros(0))
        return QpSolution(x, np.zeros(0), STATUS_OPTIMAL, 0, res)

    m = A.shape[0]
    # equilibrate, then run the splitting on the scaled data; convergence
    # checks and the polish step use the original problem
    d, e, c = _ruiz_scaling(H, g, A)
    Hs = c * (H * d) * d[:, None]
    gs = c * d * g
    As = (A * d) * e[:, None]
    lo_s = e * lower
    up_s = e * upper
    lo_s[~np.isfinite(lower)] = -np.inf
    up_s[~np.isfinite(upper)] = np.inf

    rho = np.full(m, _RHO)
    rho[np.abs(up_s - lo_s) < 1e-9] = _RHO * _RHO_EQ_SCALE
    M = Hs + _SIGMA * np.eye(n) + (As.T * rho) @ As
    chol = sla.cho_factor(M, lower=True)

    x = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float) / d
    y = c / e * (np.zeros(m) if y0 is None else np.asarray(y0, dtype=float))
    z = np.clip(As @ x, lo_s, up_s)
    best = None
    it = 0
    while it < max_iters:
        for _ in range(25):
            rhs = _SIGMA * x - gs + As.T @ (rho * z - y)
            x_t = sla.cho_solve(chol, rhs)
            z_t = As @ x_t
            x = _ALPHA * x_t + (1 - _ALPHA) * x
            z_mix = _ALPHA * z_t + (1 - _ALPHA) * z
            z_new = np.clip(z_mix + y / rho, lo_s, up_s)
            y = y + rho * (z_mix - z_new)
            z = z_new
            it += 1
        x_u = d * x
        y_u = e * y / c
        x_p, y_p = _polish(H, g, A, lower, upper, x_u, y_u)
        res_p = kkt_residual(H, g, A, lower, upper, x_p, y_p)
        if best is None or res_p < best[2]:
            best = (x_p, y_p, res_p)
        if res_p <= _KKT_TOL:
            return QpSolution(x_p, y_p, STATUS_OPTIMAL, it, res_p)
        res_raw = kkt_residual(H, g, A, lower, upper, x_u, y_u)
        if best is None or res_raw < best[2]:
            best = (x_u, y_u, res_raw)
        if res_raw <= _KKT_TOL:
            return QpSolution(x_u, y_u, STATUS_OPTIMAL, it, res_raw)
    x_b, y_b, res_b = best
    return QpSolution(x_b, y_b, STATUS_MAX_ITERS, it, res_b)
