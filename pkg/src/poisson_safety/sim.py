"""Deterministic closed-loop simulator.

Scenario configs (JSON) describe a grid, a robot footprint, scripted moving
obstacles, a goal schedule, and a controller. Each tick renders obstacles to
an occupancy grid, forecasts them, rebuilds the lifted safety field (warm
started), runs the configured controller, and Euler-steps the world with the
same integrator the MPC uses internally, so model mismatch is zero by
construction.
"""

from __future__ import annotations

import collections
import csv
import json
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import shapely

from .control import (ControlInput, FilterResult, InputBox, MpcParams,
                      MpcSolution, RobotState, dcbf_filter, sample_clamped,
                      solve_mpc)
from .errors import ConfigError
from .forecast import (LiftedBuildParams, build_lifted_field,
                       estimate_velocities)
from .geometry import FootprintShape
from .grid import GridSpec, OccupancyGrid, wrap_error
from .poisson import SolverParams

LOG_COLUMNS = ("t", "x", "y", "theta", "v_x", "v_y", "omega",
               "h_value", "slack", "solve_ms", "field_ms")

# timing columns vary run to run; everything else must be bit-reproducible
TIMING_COLUMNS = ("solve_ms", "field_ms")

_REACH_TOL = 0.1
_DEADLOCK_WINDOW = 0.2      # final fraction of the run examined for stall
_DEADLOCK_DISP = 0.05       # m of net motion below which we call it stalled


@dataclass(frozen=True)
class ObstacleSpec:
    shape: FootprintShape
    pose: tuple[float, float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    spawn_time: float = 0.0

    def to_json(self) -> dict:
        return {"shape": self.shape.to_json(), "pose": list(self.pose),
                "velocity": list(self.velocity),
                "spawn_time": self.spawn_time}


@dataclass(frozen=True)
class GoalSchedule:
    mode: str = "fixed"                # fixed | waypoints | teleop
    pose: tuple[float, float, float] | None = None
    waypoints: tuple = ()
    reach_tol: float = _REACH_TOL

    def to_json(self) -> dict:
        out = {"mode": self.mode, "reach_tol": self.reach_tol}
        if self.pose is not None:
            out["pose"] = list(self.pose)
        if self.waypoints:
            out["waypoints"] = [list(w) for w in self.waypoints]
        return out


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "mpc"                  # mpc | dcbf
    mpc: MpcParams = MpcParams()
    rho: float = 0.8                   # pointwise-filter decay rate
    kp: float = 1.0                    # nominal P gains for the dcbf path
    kw: float = 1.5
    freeze_heading: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    grid: GridSpec
    footprint: FootprintShape
    start: tuple[float, float, float]
    obstacles: tuple[ObstacleSpec, ...]
    goal: GoalSchedule
    controller: ControllerConfig
    solver: SolverParams
    n_theta: int
    n_t: int
    dt_field: float
    duration: float
    dt: float = 0.05
    rebuild_every: int = 1
    seed: int = 0
    spawn_jitter: float = 0.0          # m of uniform spawn-pose jitter
    noise_p: float = 0.0               # Bernoulli cell-flip probability
    velocity_baseline: float = 0.25    # s between frames used for tracking

    def to_json(self) -> dict:
        c = self.controller
        return {
            "name": self.name,
            "grid": {"nx": self.grid.nx, "ny": self.grid.ny,
                     "resolution": self.grid.resolution,
                     "origin": list(self.grid.origin)},
            "footprint": self.footprint.to_json(),
            "start": list(self.start),
            "obstacles": [o.to_json() for o in self.obstacles],
            "goal": self.goal.to_json(),
            "controller": {
                "kind": c.kind, "horizon": c.mpc.horizon, "dt": c.mpc.dt,
                "rho": c.rho, "q_diag": list(np.diag(c.mpc.Q)),
                "r_diag": list(np.diag(c.mpc.R)),
                "limits": {"lo": list(c.mpc.limits.lo),
                           "hi": list(c.mpc.limits.hi)},
                "sqp_iters": c.mpc.sqp_iters,
                "slack_weight": c.mpc.slack_weight,
                "trust_step": c.mpc.trust_step,
                "kp": c.kp, "kw": c.kw,
                "freeze_heading": c.freeze_heading},
            "solver": {"forcing": self.solver.forcing,
                       "relax": self.solver.relax, "tol": self.solver.tol,
                       "max_iters": self.solver.max_iters,
                       "exterior_mode": self.solver.exterior_mode},
            "n_theta": self.n_theta, "n_t": self.n_t,
            "dt_field": self.dt_field, "duration": self.duration,
            "dt": self.dt, "rebuild_every": self.rebuild_every,
            "seed": self.seed, "spawn_jitter": self.spawn_jitter,
            "noise_p": self.noise_p,
            "velocity_baseline": self.velocity_baseline,
        }

    def lifted_params(self) -> LiftedBuildParams:
        return LiftedBuildParams(self.n_theta, self.n_t, self.dt_field,
                                 self.footprint, self.solver)

    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def _req(obj: dict, key: str, path: str):
    if key not in obj:
        raise ConfigError(f"{path}.{key}", "missing required field")
    return obj[key]


def _num(obj, key, path, lo=None, hi=None, default=None):
    if key not in obj:
        if default is not None:
            return default
        raise ConfigError(f"{path}.{key}", "missing required field")
    v = obj[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) \
            or not math.isfinite(v):
        raise ConfigError(f"{path}.{key}", "must be a finite number")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}.{key}", f"must be >= {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}.{key}", f"must be <= {hi}")
    return v


def _pose(obj, path) -> tuple[float, float, float]:
    if not isinstance(obj, (list, tuple)) or len(obj) != 3:
        raise ConfigError(path, "must be [x, y, theta]")
    if not all(isinstance(v, (int, float)) and math.isfinite(v) for v in obj):
        raise ConfigError(path, "entries must be finite numbers")
    return (float(obj[0]), float(obj[1]), float(obj[2]))


def config_from_json(obj: dict) -> ScenarioConfig:
    """Parse and validate a scenario; ConfigError carries the field path."""
    if not isinstance(obj, dict):
        raise ConfigError("", "config must be a JSON object")
    g = _req(obj, "grid", "")
    grid = GridSpec(int(_num(g, "nx", "grid", lo=3)),
                    int(_num(g, "ny", "grid", lo=3)),
                    _num(g, "resolution", "grid", lo=1e-6),
                    tuple(g.get("origin", (0.0, 0.0))))
    try:
        fp = FootprintShape.from_json(_req(obj, "footprint", ""))
    except Exception as exc:
        raise ConfigError("footprint", str(exc)) from exc
    start = _pose(_req(obj, "start", ""), "start")

    obstacles = []
    for i, ob in enumerate(obj.get("obstacles", [])):
        p = f"obstacles[{i}]"
        try:
            shape = FootprintShape.from_json(_req(ob, "shape", p))
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"{p}.shape", str(exc)) from exc
        vel = ob.get("velocity", [0.0, 0.0])
        if len(vel) != 2:
            raise ConfigError(f"{p}.velocity", "must be [vx, vy]")
        obstacles.append(ObstacleSpec(
            shape, _pose(_req(ob, "pose", p), f"{p}.pose"),
            (float(vel[0]), float(vel[1])),
            _num(ob, "spawn_time", p, lo=0.0, default=0.0)))

    go = _req(obj, "goal", "")
    mode = go.get("mode", "fixed")
    if mode not in ("fixed", "waypoints", "teleop"):
        raise ConfigError("goal.mode", "must be fixed, waypoints or teleop")
    pose = None
    waypoints = ()
    if mode == "fixed":
        pose = _pose(_req(go, "pose", "goal"), "goal.pose")
    elif mode == "waypoints":
        wps = _req(go, "waypoints", "goal")
        if not wps:
            raise ConfigError("goal.waypoints", "must be non-empty")
        waypoints = tuple(_pose(w, f"goal.waypoints[{i}]")
                          for i, w in enumerate(wps))
    goal = GoalSchedule(mode, pose, waypoints,
                        _num(go, "reach_tol", "goal", lo=1e-6,
                             default=_REACH_TOL))
    xmin, xmax, ymin, ymax = grid.extent
    for p, where in [(pose, "goal.pose")] + \
            [(w, f"goal.waypoints[{i}]") for i, w in enumerate(waypoints)]:
        if p is not None and not (xmin <= p[0] <= xmax and ymin <= p[1] <= ymax):
            raise ConfigError(where, "goal outside grid extent")
    if not (xmin <= start[0] <= xmax and ymin <= start[1] <= ymax):
        raise ConfigError("start", "start outside grid extent")

    c = obj.get("controller", {})
    kind = c.get("kind", "mpc")
    if kind not in ("mpc", "dcbf"):
        raise ConfigError("controller.kind", "must be mpc or dcbf")
    lim = c.get("limits", {})
    limits = InputBox(tuple(lim.get("lo", (-1.0, -1.0, -2.0))),
                      tuple(lim.get("hi", (1.0, 1.0, 2.0))))
    try:
        mpc = MpcParams(
            horizon=int(_num(c, "horizon", "controller", lo=1, default=8)),
            dt=_num(c, "dt", "controller", lo=1e-6,
                    default=_num(obj, "dt", "", lo=1e-6, default=0.05)),
            rho=_num(c, "rho", "controller", default=0.8),
            Q=np.diag(c.get("q_diag", (4.0, 4.0, 0.5))),
            R=np.diag(c.get("r_diag", (0.2, 0.2, 0.05))),
            limits=limits,
            sqp_iters=int(_num(c, "sqp_iters", "controller", lo=1, default=3)),
            slack_weight=_num(c, "slack_weight", "controller", lo=0.0,
                              default=1e4),
            trust_step=_num(c, "trust_step", "controller", lo=1e-6,
                            default=0.5))
    except ValueError as exc:
        raise ConfigError("controller", str(exc)) from exc
    controller = ControllerConfig(
        kind, mpc, _num(c, "rho", "controller", default=0.8),
        _num(c, "kp", "controller", lo=0.0, default=1.0),
        _num(c, "kw", "controller", lo=0.0, default=1.5),
        bool(c.get("freeze_heading", False)))

    s = obj.get("solver", {})
    try:
        solver = SolverParams(
            forcing=_num(s, "forcing", "solver", default=-4.0),
            relax=_num(s, "relax", "solver", default=1.9),
            tol=_num(s, "tol", "solver", default=1e-6),
            max_iters=int(_num(s, "max_iters", "solver", lo=1, default=10000)),
            exterior_mode=s.get("exterior_mode", "mirrored-negative"))
    except ValueError as exc:
        raise ConfigError("solver", str(exc)) from exc

    n_theta = int(_num(obj, "n_theta", "", lo=1, default=16))
    n_t = int(_num(obj, "n_t", "", lo=1, default=6))
    dt_field = _num(obj, "dt_field", "", lo=1e-6, default=0.1)
    dt = _num(obj, "dt", "", lo=1e-6, default=0.05)
    duration = _num(obj, "duration", "", lo=dt)
    if kind == "mpc" and n_t > 1 \
            and mpc.horizon * mpc.dt > (n_t - 1) * dt_field + 1e-9:
        raise ConfigError("controller.horizon",
                          "horizon exceeds the field time range")
    return ScenarioConfig(
        name=str(obj.get("name", "scenario")), grid=grid, footprint=fp,
        start=start, obstacles=tuple(obstacles), goal=goal,
        controller=controller, solver=solver, n_theta=n_theta, n_t=n_t,
        dt_field=dt_field, duration=duration, dt=dt,
        rebuild_every=int(_num(obj, "rebuild_every", "", lo=1, default=1)),
        seed=int(_num(obj, "seed", "", default=0)),
        spawn_jitter=_num(obj, "spawn_jitter", "", lo=0.0, default=0.0),
        noise_p=_num(obj, "noise_p", "", lo=0.0, hi=1.0, default=0.0),
        velocity_baseline=_num(obj, "velocity_baseline", "", lo=dt,
                               default=max(0.25, dt)))


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as f:
        try:
            obj = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError("", f"invalid JSON: {exc}") from exc
    return config_from_json(obj)


@dataclass
class ActiveObstacle:
    spec: ObstacleSpec
    x: float
    y: float

    def polygon(self):
        return self.spec.shape.as_shapely(self.spec.pose[2], (self.x, self.y))


@dataclass
class World:
    time: float
    robot: RobotState
    obstacles: list[ActiveObstacle] = field(default_factory=list)
    pending: list[ObstacleSpec] = field(default_factory=list)


def step_world(world: World, u: ControlInput, dt: float) -> World:
    """Euler-step robot and scripted obstacles, activate due spawns."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    nxt = world.robot.as_array() + u.as_array() * dt
    world.robot = RobotState(nxt[0], nxt[1], nxt[2])
    for ob in world.obstacles:
        ob.x += ob.spec.velocity[0] * dt
        ob.y += ob.spec.velocity[1] * dt
    world.time += dt
    due = [s for s in world.pending if s.spawn_time <= world.time + 1e-12]
    world.pending = [s for s in world.pending if s not in due]
    world.obstacles.extend(
        ActiveObstacle(s, s.pose[0], s.pose[1]) for s in due)
    return world


def render_occupancy(world: World, spec: GridSpec,
                     noise_p: float = 0.0, rng=None) -> OccupancyGrid:
    """Perception emulation: a cell is occupied when its center lies inside
    an active obstacle; the border ring is always occupied."""
    cells = np.zeros((spec.nx, spec.ny), dtype=bool)
    res = spec.resolution
    for ob in world.obstacles:
        poly = ob.polygon()
        minx, miny, maxx, maxy = poly.bounds
        i0 = max(0, int(math.floor((minx - spec.origin[0]) / res)))
        i1 = min(spec.nx - 1, int(math.ceil((maxx - spec.origin[0]) / res)))
        j0 = max(0, int(math.floor((miny - spec.origin[1]) / res)))
        j1 = min(spec.ny - 1, int(math.ceil((maxy - spec.origin[1]) / res)))
        if i0 > i1 or j0 > j1:
            continue
        ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1),
                             indexing="ij")
        cx = spec.origin[0] + ii * res
        cy = spec.origin[1] + jj * res
        hit = shapely.contains_xy(poly, cx.ravel(), cy.ravel())
        cells[ii.ravel()[hit], jj.ravel()[hit]] = True
    if noise_p > 0.0 and rng is not None:
        interior = np.ones_like(cells)
        interior[0, :] = interior[-1, :] = False
        interior[:, 0] = interior[:, -1] = False
        flips = (rng.random(cells.shape) < noise_p) & interior
        cells ^= flips
    cells[0, :] = cells[-1, :] = True
    cells[:, 0] = cells[:, -1] = True
    return OccupancyGrid(spec, cells)


@dataclass
class TrajectoryLog:
    rows: list          # list of dicts keyed by LOG_COLUMNS
    name: str = ""

    def column(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.rows])

    def summary(self) -> dict:
        h = self.column("h_value")
        t = self.column("t")
        x = self.column("x")
        y = self.column("y")
        solve = self.column("solve_ms")
        fld = self.column("field_ms")
        window = t >= t[-1] * (1.0 - _DEADLOCK_WINDOW)
        disp = math.hypot(x[window][-1] - x[window][0],
                          y[window][-1] - y[window][0])
        reach = self.rows[-1].get("_goal_reach_time", math.nan)
        reached = math.isfinite(reach)
        return {
            "min_h": float(h.min()),
            "goal_reach_time": float(reach),
            "deadlock": bool(not reached and disp < _DEADLOCK_DISP),
            "solve_ms_p50": float(np.percentile(solve, 50)),
            "solve_ms_p95": float(np.percentile(solve, 95)),
            "field_ms_p50": float(np.percentile(fld, 50)),
            "field_ms_p95": float(np.percentile(fld, 95)),
        }

    def to_csv(self, path_or_buf) -> None:
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            f = open(path_or_buf, "w", newline="", encoding="utf-8")
            close = True
        else:
            f = path_or_buf
        try:
            w = csv.writer(f)
            w.writerow(LOG_COLUMNS)
            for r in self.rows:
                w.writerow([format(r[k], ".12g") for k in LOG_COLUMNS])
        finally:
            if close:
                f.close()

    @staticmethod
    def from_csv(path_or_buf) -> "TrajectoryLog":
        close = False
        if isinstance(path_or_buf, (str, bytes)):
            f = open(path_or_buf, "r", newline="", encoding="utf-8")
            close = True
        else:
            f = path_or_buf
        try:
            rd = csv.reader(f)
            header = next(rd)
            if tuple(header) != LOG_COLUMNS:
                raise ValueError("unexpected log header")
            rows = [dict(zip(LOG_COLUMNS, map(float, line))) for line in rd]
        finally:
            if close:
                f.close()
        if not rows:
            raise ValueError("empty log")
        log = TrajectoryLog(rows)
        log._recover_reach_time()
        return log

    def _recover_reach_time(self, tol: float = _REACH_TOL) -> None:
        # reach time is derivable from the trajectory against the last pose
        # only when the goal is known; replay approximates with the final pose
        gx, gy = self.rows[-1]["x"], self.rows[-1]["y"]
        reach = math.nan
        for r in self.rows:
            if math.hypot(r["x"] - gx, r["y"] - gy) <= tol:
                reach = r["t"]
                break
        self.rows[-1]["_goal_reach_time"] = reach


class SimSession:
    """Stepwise closed-loop simulation; used by run_scenario and the teleop
    service. One tick = perceive, forecast, (re)build field, control, step.
    """

    def __init__(self, config: ScenarioConfig, goal_provider=None):
        self.config = config
        self.goal_provider = goal_provider
        self.rng = np.random.default_rng(config.seed)
        self.world = World(0.0, RobotState(*config.start))
        for spec in config.obstacles:
            spec = self._jitter(spec)
            if spec.spawn_time <= 0.0:
                self.world.obstacles.append(
                    ActiveObstacle(spec, spec.pose[0], spec.pose[1]))
            else:
                self.world.pending.append(spec)
        self.lifted = config.lifted_params()
        self.field = None
        self.mpc_warm: MpcSolution | None = None
        self.prev_occ: OccupancyGrid | None = None
        # frame ring for velocity estimation over a baseline longer than one
        # tick: centroid quantization error scales as resolution / baseline
        depth = max(1, int(round(config.velocity_baseline / config.dt)))
        self._frames: collections.deque = collections.deque(maxlen=depth)
        self.goal = self._initial_goal()
        self._wp_index = 0
        self._tick = 0
        self._goal_reach_time = math.nan
        self.rows: list[dict] = []
        self.last_plan: np.ndarray | None = None
        self.last_filter: FilterResult | None = None
        self.events: list[str] = []

    def _jitter(self, spec: ObstacleSpec) -> ObstacleSpec:
        if self.config.spawn_jitter <= 0.0:
            return spec
        j = self.rng.uniform(-self.config.spawn_jitter,
                             self.config.spawn_jitter, size=2)
        pose = (spec.pose[0] + j[0], spec.pose[1] + j[1], spec.pose[2])
        return replace(spec, pose=pose)

    def _initial_goal(self) -> RobotState:
        cfg = self.config.goal
        if cfg.mode == "fixed":
            return RobotState(*cfg.pose)
        if cfg.mode == "waypoints":
            return RobotState(*cfg.waypoints[0])
        return RobotState(*self.config.start)  # teleop: hold position

    def _update_goal(self) -> None:
        cfg = self.config.goal
        if cfg.mode == "teleop":
            if self.goal_provider is not None:
                g = self.goal_provider()
                if g is not None:
                    self.goal = g
            return
        if cfg.mode == "waypoints":
            r = self.world.robot
            g = cfg.waypoints[self._wp_index]
            if math.hypot(r.x - g[0], r.y - g[1]) <= cfg.reach_tol \
                    and self._wp_index + 1 < len(cfg.waypoints):
                self._wp_index += 1
                self.goal = RobotState(*cfg.waypoints[self._wp_index])
            elif self._wp_index == 0:
                self.goal = RobotState(*g)

    def spawn_obstacle(self, spec: ObstacleSpec) -> None:
        self.world.obstacles.append(
            ActiveObstacle(spec, spec.pose[0], spec.pose[1]))

    def _controller_limits(self) -> InputBox:
        lim = self.config.controller.mpc.limits
        if self.config.controller.freeze_heading:
            return InputBox((lim.lo[0], lim.lo[1], 0.0),
                            (lim.hi[0], lim.hi[1], 0.0))
        return lim

    def _nominal_input(self) -> ControlInput:
        c = self.config.controller
        r = self.world.robot
        g = self.goal
        lim = self._controller_limits()
        u = np.array([c.kp * (g.x - r.x), c.kp * (g.y - r.y),
                      c.kw * wrap_error(g.theta - r.theta)])
        return ControlInput.from_array(lim.clip(u))

    def tick(self, apply_input: bool = True) -> dict:
        """Run one control tick; returns the log row (also appended)."""
        cfg = self.config
        self._update_goal()
        occ = render_occupancy(self.world, cfg.grid, cfg.noise_p, self.rng)
        field_ms = 0.0
        if self.field is None or self._tick % cfg.rebuild_every == 0:
            old = self._frames[0] if self._frames else occ
            elapsed = len(self._frames) * cfg.dt
            tracks = estimate_velocities(old, occ, max(elapsed, cfg.dt))
            t0 = time.perf_counter()
            self.field, _rep = build_lifted_field(
                occ, tracks, self.lifted, warm=self.field,
                t0=self.world.time)
            field_ms = (time.perf_counter() - t0) * 1e3
        self._frames.append(occ)
        self.prev_occ = occ

        r = self.world.robot
        c = cfg.controller
        t0 = time.perf_counter()
        slack = 0.0
        if c.kind == "mpc":
            params = c.mpc
            if c.freeze_heading:
                params = replace(params, limits=self._controller_limits())
            try:
                sol = solve_mpc(r, self.goal, self.field, self.world.time,
                                params, warm=self.mpc_warm)
                self.mpc_warm = sol
                self.last_plan = sol.states
                u = sol.first_input
                slack = sol.slack_total
            except Exception as exc:       # solver failures never kill the loop
                self.events.append(f"mpc failure at t={self.world.time}: {exc}")
                u = ControlInput()
        else:
            u_nom = self._nominal_input()
            res = dcbf_filter(r, u_nom, self.field, self.world.time,
                              c.rho, cfg.dt, self._controller_limits())
            self.last_filter = res
            u = res.u
            self.last_plan = None
        solve_ms = (time.perf_counter() - t0) * 1e3

        h = sample_clamped(self.field, r.x, r.y, r.theta, self.world.time)
        row = {"t": self.world.time, "x": r.x, "y": r.y, "theta": r.theta,
               "v_x": u.v_x, "v_y": u.v_y, "omega": u.omega, "h_value": h,
               "slack": slack, "solve_ms": solve_ms, "field_ms": field_ms}
        self.rows.append(row)
        if math.isnan(self._goal_reach_time) and cfg.goal.mode != "teleop":
            fg = self._final_goal()
            if math.hypot(r.x - fg[0], r.y - fg[1]) <= cfg.goal.reach_tol:
                self._goal_reach_time = self.world.time
        if apply_input:
            step_world(self.world, u, cfg.dt)
        self._tick += 1
        return row

    def _final_goal(self):
        cfg = self.config.goal
        if cfg.mode == "waypoints":
            return cfg.waypoints[-1]
        if cfg.pose is not None:
            return cfg.pose
        g = self.goal
        return (g.x, g.y, g.theta)

    def finish(self) -> TrajectoryLog:
        if self.rows:
            self.rows[-1]["_goal_reach_time"] = self._goal_reach_time
        return TrajectoryLog(self.rows, self.config.name)


def run_scenario(config: ScenarioConfig, goal_provider=None,
                 on_tick=None) -> TrajectoryLog:
    """Run the scenario to completion; duration/dt steps plus the final
    state row. Deterministic given the config seed (spawn jitter and
    optional perception noise are the only randomness).
    """
    session = SimSession(config, goal_provider)
    n = config.n_steps()
    for k in range(n + 1):
        row = session.tick(apply_input=(k < n))
        if on_tick is not None:
            on_tick(session, row)
    return session.finish()
