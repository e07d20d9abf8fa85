"""WebSocket teleoperation service.

One authoritative sim thread ticks the scenario; connection handlers talk to
it only through a command deque (inbound) and per-client bounded queues
(outbound). The sim tick never blocks on network I/O: a client whose send
queue is full is dropped.

Wire protocol (JSON, envelope {"v": 1, "type": ..., "seq": ..., "payload"}):
  client -> server: goal, spawn_obstacle, pause, resume, set_params
  server -> client: state, field_slice, event
"""

from __future__ import annotations

import asyncio
import base64
import collections
import contextlib
import dataclasses
import itertools
import json
import math
import threading
import time

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .control import MpcParams, RobotState
from .geometry import FootprintShape
from .sim import ObstacleSpec, ScenarioConfig, SimSession

SEND_QUEUE_DEPTH = 32       # outbound messages buffered per client before drop
PROTOCOL_VERSION = 1
_FIELD_RATE_HZ = 5.0
_CLIENT_TYPES = ("goal", "spawn_obstacle", "pause", "resume", "set_params")


class TeleopServer:
    """Owns the sim thread and the client registry."""

    def __init__(self, config: ScenarioConfig):
        if config.goal.mode != "teleop":
            raise ValueError("teleop service requires goal.mode = teleop")
        self.config = config
        self.session = SimSession(config, goal_provider=self._goal_provider)
        self.commands: collections.deque = collections.deque()
        self.clients: dict[int, asyncio.Queue] = {}
        self.loop: asyncio.AbstractEventLoop | None = None
        self.paused = False
        self._goal: RobotState | None = None
        self._seq = itertools.count(1)
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._client_ids = itertools.count(1)
        self._last_state_msg: str | None = None

    # ---- sim thread ----------------------------------------------------

    def start(self, loop: asyncio.AbstractEventLoop) -> None:
        self.loop = loop
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="sim-tick")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def _run(self) -> None:
        dt = self.config.dt
        field_every = max(1, int(round(1.0 / (dt * _FIELD_RATE_HZ))))
        k = 0
        next_tick = time.perf_counter()
        while not self._stop.is_set():
            self._drain_commands()
            if not self.paused:
                row = self.session.tick(apply_input=True)
                self._last_state_msg = self._state_message(row)
            if self._last_state_msg is not None:
                self._broadcast(self._last_state_msg)
            if k % field_every == 0 and self.session.field is not None:
                self._broadcast(self._field_message())
            k += 1
            next_tick += dt
            delay = next_tick - time.perf_counter()
            if delay > 0:
                time.sleep(delay)
            else:
                next_tick = time.perf_counter()  # running behind; no backlog

    def _goal_provider(self):
        return self._goal

    def _drain_commands(self) -> None:
        goal_msg = None
        while self.commands:
            mtype, payload, reply = self.commands.popleft()
            if mtype == "goal":
                goal_msg = (payload, reply)   # last writer wins
            else:
                self._apply(mtype, payload, reply)
        if goal_msg is not None:
            self._apply("goal", *goal_msg)

    def _apply(self, mtype, payload, reply) -> None:
        try:
            if mtype == "goal":
                g = RobotState(float(payload["x"]), float(payload["y"]),
                               float(payload.get("theta", 0.0)))
                self._check_inside(g.x, g.y, "goal")
                self._goal = g
            elif mtype == "spawn_obstacle":
                shape = FootprintShape.from_json(payload["shape"])
                pose = tuple(float(v) for v in payload["pose"])
                self._check_inside(pose[0], pose[1], "spawn pose")
                vel = tuple(float(v) for v in payload.get("velocity", (0, 0)))
                self.session.spawn_obstacle(ObstacleSpec(shape, pose, vel))
            elif mtype == "pause":
                self.paused = True
            elif mtype == "resume":
                self.paused = False
            elif mtype == "set_params":
                self._set_params(payload)
        except Exception as exc:
            self._send_event(reply, "error", f"{mtype} rejected: {exc}")
            return
        self._send_event(reply, "info", f"{mtype} applied")

    def _check_inside(self, x: float, y: float, what: str) -> None:
        xmin, xmax, ymin, ymax = self.config.grid.extent
        if not (xmin <= x <= xmax and ymin <= y <= ymax):
            raise ValueError(f"{what} outside grid extent")

    def _set_params(self, payload: dict) -> None:
        ctrl = self.config.controller
        mpc = ctrl.mpc
        if "N" in payload:
            mpc = dataclasses.replace(mpc, horizon=int(payload["N"]))
        if "rho" in payload:
            mpc = dataclasses.replace(mpc, rho=float(payload["rho"]))
            ctrl = dataclasses.replace(ctrl, rho=float(payload["rho"]))
        if "controller" in payload:
            kind = payload["controller"]
            if kind not in ("mpc", "dcbf"):
                raise ValueError("controller must be mpc or dcbf")
            ctrl = dataclasses.replace(ctrl, kind=kind)
        ctrl = dataclasses.replace(ctrl, mpc=mpc)
        if self.config.n_t > 1 and mpc.horizon * mpc.dt \
                > (self.config.n_t - 1) * self.config.dt_field + 1e-9:
            raise ValueError("horizon exceeds the field time range")
        self.config = dataclasses.replace(self.config, controller=ctrl)
        self.session.config = self.config
        self.session.mpc_warm = None     # horizon change invalidates the plan

    # ---- outbound ------------------------------------------------------

    def _envelope(self, mtype: str, payload: dict) -> str:
        return json.dumps({"v": PROTOCOL_VERSION, "type": mtype,
                           "seq": next(self._seq), "payload": payload})

    def _state_message(self, row: dict) -> str:
        plan = self.session.last_plan
        obstacles = [{"x": ob.x, "y": ob.y, "theta": ob.spec.pose[2],
                      "shape": ob.spec.shape.to_json()}
                     for ob in self.session.world.obstacles]
        return self._envelope("state", {
            "t": row["t"],
            "robot": {"x": row["x"], "y": row["y"], "theta": row["theta"]},
            "inputs": {"v_x": row["v_x"], "v_y": row["v_y"],
                       "omega": row["omega"]},
            "h_value": row["h_value"],
            "plan": [] if plan is None else
                    [[float(p[0]), float(p[1]), float(p[2])] for p in plan],
            "obstacles": obstacles,
            "paused": self.paused,
        })

    def _field_message(self) -> str:
        fld = self.session.field
        sp = fld.spec
        r = self.session.world.robot
        j = int(round(r.theta / sp.theta_step)) % sp.n_theta
        sl = np.ascontiguousarray(fld.values[:, :, j, 0], dtype="<f4")
        return self._envelope("field_slice", {
            "i_theta": j, "i_t": 0, "nx": sp.nx, "ny": sp.ny,
            "resolution": sp.resolution, "origin": list(sp.origin),
            "theta": j * sp.theta_step,
            "data": base64.b64encode(sl.tobytes()).decode("ascii"),
        })

    def _broadcast(self, text: str) -> None:
        if self.loop is None:
            return
        self.loop.call_soon_threadsafe(self._push_all, text)

    def _push_all(self, text: str) -> None:
        for cid in list(self.clients):
            q = self.clients[cid]
            if q.qsize() >= SEND_QUEUE_DEPTH:
                # slow client: drop it rather than stall the sim
                self.clients.pop(cid, None)
                q.put_nowait(None)       # sentinel closes the sender task
            else:
                q.put_nowait(text)

    def _send_event(self, reply_q, level: str, text: str) -> None:
        if reply_q is None or self.loop is None:
            return
        msg = self._envelope("event", {"level": level, "text": text})
        self.loop.call_soon_threadsafe(self._push_one, reply_q, msg)

    def _push_one(self, q: asyncio.Queue, text: str) -> None:
        if q.qsize() < SEND_QUEUE_DEPTH:
            q.put_nowait(text)


def build_app(config: ScenarioConfig) -> FastAPI:
    server = TeleopServer(config)

    @contextlib.asynccontextmanager
    async def _lifespan(_app: FastAPI):
        server.start(asyncio.get_running_loop())
        try:
            yield
        finally:
            server.stop()

    app = FastAPI(lifespan=_lifespan)
    app.state.teleop = server

    @app.get("/health")
    async def health():
        return "ok"

    @app.get("/scenario")
    async def scenario():
        return server.config.to_json()

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        cid = next(server._client_ids)
        q: asyncio.Queue = asyncio.Queue()
        server.clients[cid] = q

        async def sender():
            while True:
                item = await q.get()
                if item is None:
                    break
                await websocket.send_text(item)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    server._send_event(q, "error", "malformed JSON ignored")
                    continue
                mtype = msg.get("type")
                if msg.get("v") != PROTOCOL_VERSION \
                        or mtype not in _CLIENT_TYPES:
                    server._send_event(q, "error",
                                       f"unknown message type {mtype!r}")
                    continue
                server.commands.append((mtype, msg.get("payload", {}), q))
        except WebSocketDisconnect:
            pass
        finally:
            server.clients.pop(cid, None)
            send_task.cancel()
    return app


def serve(config: ScenarioConfig, addr: str) -> None:
    """Blocking entry point: run the teleop service on host:port."""
    import uvicorn

    host, _, port = addr.rpartition(":")
    uvicorn.run(build_app(config), host=host or "127.0.0.1",
                port=int(port), log_level="warning")
