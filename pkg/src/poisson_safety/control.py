"""Safety-filtering control stack over the planar single-integrator model.

Contains the pointwise discrete-CBF filter, the SQP-based MPC with safety
decay constraints along the horizon (condensed to the stacked inputs), and
the heading-allocation QP that splits a commanded yaw rate between body and
waist rotation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import OutOfDomain
from .grid import LiftedSafetyField, wrap_angle, wrap_error
from .qp import STATUS_MAX_ITERS, solve_qp

STATUS_OPTIMAL_TOL = "optimal-tolerance"
STATUS_SQP_MAX_ITERS = "max-iters"
STATUS_INFEASIBLE_SLACKED = "infeasible-slacked"

_SLACK_EPS = 1e-6
_STEP_TOL = 1e-5


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)
                and math.isfinite(self.theta)):
            raise ValueError("state must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


@dataclass(frozen=True)
class ControlInput:
    v_x: float = 0.0
    v_y: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not np.isfinite([self.v_x, self.v_y, self.omega]).all():
            raise ValueError("input must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.v_x, self.v_y, self.omega])

    @staticmethod
    def from_array(u) -> "ControlInput":
        return ControlInput(float(u[0]), float(u[1]), float(u[2]))


@dataclass(frozen=True)
class InputBox:
    lo: tuple[float, float, float] = (-1.0, -1.0, -2.0)
    hi: tuple[float, float, float] = (1.0, 1.0, 2.0)

    def __post_init__(self):
        if np.any(np.asarray(self.lo) > np.asarray(self.hi)):
            raise ValueError("lo must be <= hi")

    def clip(self, u: np.ndarray) -> np.ndarray:
        return np.clip(u, self.lo, self.hi)


def _default_q():
    return np.diag([4.0, 4.0, 0.5])


def _default_r():
    return np.diag([0.2, 0.2, 0.05])


@dataclass(frozen=True)
class MpcParams:
    horizon: int = 8
    dt: float = 0.05
    rho: float = 0.8
    Q: np.ndarray = field(default_factory=_default_q)
    R: np.ndarray = field(default_factory=_default_r)
    limits: InputBox = InputBox()
    sqp_iters: int = 3
    slack_weight: float = 1e4
    trust_step: float = 0.5

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0 < self.rho < 1:
            raise ValueError("rho must be in (0, 1)")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        Q = np.asarray(self.Q, dtype=float)
        R = np.asarray(self.R, dtype=float)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        if np.linalg.eigvalsh(0.5 * (Q + Q.T)).min() < -1e-9:
            raise ValueError("Q must be PSD")
        if np.linalg.eigvalsh(0.5 * (R + R.T)).min() <= 0:
            raise ValueError("R must be PD")


@dataclass
class MpcSolution:
    states: np.ndarray  # (N+1, 3)
    inputs: np.ndarray  # (N, 3)
    cost: float
    slack_total: float
    sqp_iterations: int
    status: str

    @property
    def first_input(self) -> ControlInput:
        return ControlInput.from_array(self.inputs[0])


@dataclass
class FilterResult:
    u: ControlInput
    modified: bool
    infeasible: bool
    h_now: float
    h_pred: float


def _clamped_query(field_: LiftedSafetyField, x, y, theta, t):
    """Clamp position/time into the field domain; controllers clamp
    deliberately so the loop never dies on an out-of-range knot."""
    sp = field_.spec
    xmin, xmax, ymin, ymax = sp.extent
    xc = min(max(x, xmin), xmax)
    yc = min(max(y, ymin), ymax)
    tc = min(max(t, field_.t0), field_.t_max)
    return xc, yc, theta, tc


def sample_clamped(field_: LiftedSafetyField, x, y, theta, t) -> float:
    return field_.sample(*_clamped_query(field_, x, y, theta, t))


def gradient_clamped(field_: LiftedSafetyField, x, y, theta, t):
    return field_.gradient(*_clamped_query(field_, x, y, theta, t))


def dcbf_filter(chi: RobotState, u_nom: ControlInput,
                field_: LiftedSafetyField, t: float, rho: float, dt: float,
                limits: InputBox) -> FilterResult:
    """Pointwise safety filter: minimally modify u_nom so the safety value
    one step ahead decays no faster than the geometric bound rho * h.

    The nominal input passes through untouched when it already satisfies the
    exact sampled constraint. Otherwise a linearized QP (one fixed-point
    relinearization pass) is solved, followed by a backtracking line search
    against the exact sampled constraint so the geometric decay bound holds
    pointwise, not just to linearization error.
    """
    chi_v = chi.as_array()
    h_now = sample_clamped(field_, chi.x, chi.y, chi.theta, t)
    bound = rho * h_now

    def h_after(u):
        nxt = chi_v + u * dt
        return sample_clamped(field_, nxt[0], nxt[1], nxt[2], t + dt)

    u0 = u_nom.as_array()
    u_boxed = limits.clip(u0)
    if np.array_equal(u0, u_boxed):
        h_pred = h_after(u0)
        if h_pred >= bound:
            return FilterResult(u_nom, False, False, h_now, h_pred)

    u = u_boxed
    for _ in range(2):  # linearize, solve, relinearize once
        pred = chi_v + u * dt
        q = _clamped_query(field_, pred[0], pred[1], pred[2], t + dt)
        h_bar = field_.sample(*q)
        grad = np.array(field_.gradient(*q))
        # h(chi + u dt) ~ h_bar + grad . (chi + u dt - pred)
        a = grad * dt
        rhs = bound - h_bar + grad @ (pred - chi_v)
        H = 2.0 * np.eye(3)
        g = -2.0 * u0
        A = np.vstack([a[None, :], np.eye(3)])
        lower = np.concatenate([[rhs], limits.lo])
        upper = np.concatenate([[np.inf], limits.hi])
        # infeasible within the box: best achievable constraint value
        best_val = a @ np.where(a >= 0, limits.hi, limits.lo)
        if best_val < rhs - 1e-12:
            u_best = np.where(a >= 0, limits.hi, limits.lo).astype(float)
            return FilterResult(ControlInput.from_array(u_best), True, True,
                                h_now, h_after(u_best))
        sol = solve_qp(H, g, A, lower, upper)
        u = limits.clip(sol.x)

    # restore the exact sampled constraint by backtracking toward rest
    # (toward the box-clipped rest point, so the search stays inside limits)
    if h_after(u) < bound - 1e-12:
        rest = limits.clip(np.zeros(3))
        if h_after(rest) < bound - 1e-12:
            # even rest violates (moving obstacles or a box excluding it);
            # keep the QP answer and flag the step
            return FilterResult(ControlInput.from_array(u), True, True,
                                h_now, h_after(u))
        lo_a, hi_a = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo_a + hi_a)
            if h_after(rest + mid * (u - rest)) >= bound:
                lo_a = mid
            else:
                hi_a = mid
        u = rest + lo_a * (u - rest)
    return FilterResult(ControlInput.from_array(u), True, False,
                        h_now, h_after(u))


def solve_mpc(chi_k: RobotState, chi_d: RobotState,
              field_: LiftedSafetyField, t: float, params: MpcParams,
              warm: MpcSolution | None = None) -> MpcSolution:
    """SQP predictive safety filter over the single-integrator model.

    Each SQP pass rolls the input plan out, samples safety values and
    gradients at the knots, and solves a condensed QP in the stacked inputs
    with soft (slacked) safety-decay rows and input boxes. The first input
    of the returned plan is the control action.
    """
    N = params.horizon
    dt = params.dt
    sp = field_.spec
    if sp.n_t > 1 and N * dt > (sp.n_t - 1) * sp.dt_field + 1e-9:
        raise ValueError("horizon exceeds the field's time range")

    Q, R = params.Q, params.R
    chi0 = chi_k.as_array()
    goal = chi_d.as_array()
    u_plan = np.zeros((N, 3))
    if warm is not None and warm.inputs.shape == (N, 3):
        u_plan = warm.inputs.copy()
    u_plan = params.limits.clip(u_plan)

    lo = np.asarray(params.limits.lo)
    hi = np.asarray(params.limits.hi)
    slack = np.zeros(N)
    qp_maxed = False
    sqp_done = 0
    for sqp_it in range(params.sqp_iters):
        states = _rollout(chi0, u_plan, dt)
        xmin, xmax, ymin, ymax = sp.extent
        qx = np.clip(states[:, 0], xmin, xmax)
        qy = np.clip(states[:, 1], ymin, ymax)
        qt = np.clip(t + dt * np.arange(N + 1), field_.t0, field_.t_max)
        h_bar = np.asarray(field_.sample(qx, qy, states[:, 2], qt))
        grads = np.column_stack(field_.gradient(qx, qy, states[:, 2], qt))

        # goal error at each knot, heading wrapped around the nominal state
        b = np.empty((N + 1, 3))
        b[:, 0] = goal[0] - states[:, 0]
        b[:, 1] = goal[1] - states[:, 1]
        for i in range(N + 1):
            b[i, 2] = wrap_error(goal[2] - states[i, 2])

        nu = 3 * N
        nvar = nu + N
        H = np.zeros((nvar, nvar))
        g = np.zeros(nvar)
        # state-cost blocks: sum_i C_i' Q C_i has block [j, k] = (N - max(j,k)) Q
        for j in range(N):
            for k in range(N):
                H[3 * j:3 * j + 3, 3 * k:3 * k + 3] = \
                    2.0 * dt * dt * (N - max(j, k)) * Q
        for j in range(N):
            H[3 * j:3 * j + 3, 3 * j:3 * j + 3] += 2.0 * R
            g[3 * j:3 * j + 3] += 2.0 * R @ u_plan[j]
            acc = np.zeros(3)
            for i in range(j + 1, N + 1):
                acc += Q @ b[i]
            g[3 * j:3 * j + 3] += -2.0 * dt * acc
        H[nu:, nu:] = 2.0 * params.slack_weight * np.eye(N)

        rows = np.zeros((N, nvar))
        rlo = np.empty(N)
        for i in range(N):
            for j in range(N):
                rows[i, 3 * j:3 * j + 3] = dt * (
                    (grads[i + 1] if j <= i else 0.0)
                    - (params.rho * grads[i] if j < i else 0.0))
            rows[i, nu + i] = 1.0
            rlo[i] = params.rho * h_bar[i] - h_bar[i + 1]
        rhi = np.full(N, np.inf)

        du_lo = np.maximum(lo - u_plan, -params.trust_step).ravel()
        du_hi = np.minimum(hi - u_plan, params.trust_step).ravel()
        A = np.vstack([rows,
                       np.hstack([np.eye(nu), np.zeros((nu, N))]),
                       np.hstack([np.zeros((N, nu)), np.eye(N)])])
        lower = np.concatenate([rlo, du_lo, np.zeros(N)])
        upper = np.concatenate([rhi, du_hi, np.full(N, np.inf)])
        # iteration cap bounds worst-case latency; best iterate still returned
        sol = solve_qp(H, g, A, lower, upper, max_iters=500)
        if sol.status == STATUS_MAX_ITERS:
            qp_maxed = True
        du = sol.x[:nu].reshape(N, 3)
        slack = np.maximum(sol.x[nu:], 0.0)
        u_plan = params.limits.clip(u_plan + du)
        sqp_done = sqp_it + 1
        if np.abs(du).max(initial=0.0) < _STEP_TOL:
            break

    states = _rollout(chi0, u_plan, dt)
    cost = _plan_cost(states, u_plan, goal, Q, R)
    slack_total = float(slack.sum())
    if qp_maxed:
        status = STATUS_SQP_MAX_ITERS
    elif slack_total > _SLACK_EPS:
        status = STATUS_INFEASIBLE_SLACKED
    else:
        status = STATUS_OPTIMAL_TOL
    return MpcSolution(states, u_plan, cost, slack_total, sqp_done, status)


def _rollout(chi0: np.ndarray, u_plan: np.ndarray, dt: float) -> np.ndarray:
    N = u_plan.shape[0]
    states = np.empty((N + 1, 3))
    states[0] = chi0
    for i in range(N):
        states[i + 1] = states[i] + u_plan[i] * dt
    return states


def _plan_cost(states, inputs, goal, Q, R) -> float:
    cost = 0.0
    for i in range(states.shape[0]):
        e = goal - states[i]
        e[2] = wrap_error(e[2])
        cost += float(e @ Q @ e)
    for u in inputs:
        cost += float(u @ R @ u)
    return cost


def allocate_heading(omega: float, beta0: float, lam: float, dt: float,
                     w_alpha_min: float, w_alpha_max: float):
    """Split a commanded yaw rate into body and waist rates, trading exact
    tracking against misalignment decay; exact minimizer of the 2-variable
    box QP by case enumeration.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if w_alpha_min > w_alpha_max:
        raise ValueError("limits must be ordered")

    if lam > 0:
        w_beta_free = -beta0 / dt
        w_alpha_free = omega - w_beta_free
    else:
        w_beta_free = 0.0
        w_alpha_free = omega
    if w_alpha_min <= w_alpha_free <= w_alpha_max:
        return w_alpha_free, w_beta_free

    def clamped(c):
        wb = ((omega - c) - lam * dt * beta0) / (1.0 + lam * dt * dt)
        return c, wb

    def cost(wa, wb):
        return (wa + wb - omega) ** 2 + lam * (beta0 + wb * dt) ** 2

    candidates = [clamped(w_alpha_min), clamped(w_alpha_max)]
    return min(candidates, key=lambda p: cost(*p))
