import base64
import json

import numpy as np
import pytest
from fastapi.testclient import TestClient

from poisson_safety.service import (PROTOCOL_VERSION, TeleopServer, build_app)
from poisson_safety.sim import config_from_json


def teleop_config(**overrides):
    obj = {
        "name": "teleop-test",
        "grid": {"nx": 32, "ny": 32, "resolution": 0.1},
        "footprint": {"kind": "ellipse", "a": 0.12, "b": 0.12},
        "start": [1.5, 1.5, 0.0],
        "goal": {"mode": "teleop"},
        "controller": {"kind": "mpc", "horizon": 2, "sqp_iters": 2,
                       "dt": 0.05},
        "solver": {"tol": 1e-4},
        "n_theta": 1, "n_t": 2, "dt_field": 0.1,
        "duration": 3600.0, "dt": 0.05, "rebuild_every": 4,
    }
    obj.update(overrides)
    return config_from_json(obj)


def send(ws, mtype, payload):
    ws.send_text(json.dumps({"v": PROTOCOL_VERSION, "type": mtype,
                             "seq": 1, "payload": payload}))


def recv_until(ws, mtype, limit=200):
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        if msg["type"] == mtype:
            return msg
    raise AssertionError(f"no {mtype!r} message within {limit} frames")


def recv_event(ws, limit=200):
    return recv_until(ws, "event", limit)


@pytest.fixture
def client():
    app = build_app(teleop_config())
    with TestClient(app) as c:
        yield c


class TestHttp:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        assert r.json() == "ok"

    def test_scenario_matches_config(self, client):
        r = client.get("/scenario")
        assert r.status_code == 200
        obj = r.json()
        assert obj["name"] == "teleop-test"
        assert obj["goal"]["mode"] == "teleop"
        assert obj["grid"]["nx"] == 32

    def test_requires_teleop_goal_mode(self):
        cfg = teleop_config(goal={"mode": "fixed", "pose": [1.0, 1.0, 0.0]})
        with pytest.raises(ValueError):
            TeleopServer(cfg)


class TestWebSocket:
    def test_state_stream_with_increasing_seq(self, client):
        with client.websocket_connect("/ws") as ws:
            msgs = [recv_until(ws, "state") for _ in range(3)]
            seqs = [m["seq"] for m in msgs]
            assert seqs == sorted(seqs) and len(set(seqs)) == 3
            st = msgs[-1]["payload"]
            assert {"t", "robot", "inputs", "h_value", "plan",
                    "obstacles", "paused"} <= set(st)
            assert msgs[0]["v"] == PROTOCOL_VERSION

    def test_field_slice_decodes(self, client):
        with client.websocket_connect("/ws") as ws:
            msg = recv_until(ws, "field_slice", limit=400)
            p = msg["payload"]
            data = np.frombuffer(base64.b64decode(p["data"]), dtype="<f4")
            assert data.shape == (p["nx"] * p["ny"],)
            assert np.isfinite(data).all()
            assert p["resolution"] == pytest.approx(0.1)

    def test_goal_accepted_and_steered_toward(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, "goal", {"x": 2.2, "y": 1.5, "theta": 0.0})
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "info"
            # robot starts moving toward +x
            for _ in range(100):
                st = recv_until(ws, "state")["payload"]
                if st["robot"]["x"] > 1.55:
                    break
            else:
                raise AssertionError("robot never moved toward the goal")

    def test_goal_outside_extent_rejected(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, "goal", {"x": 50.0, "y": 1.5})
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "error"
            assert "outside" in ev["payload"]["text"]

    def test_malformed_json_event(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_text("{nope")
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "error"
            assert "malformed" in ev["payload"]["text"]

    def test_unknown_type_event(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, "self_destruct", {})
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "error"
            assert "unknown message type" in ev["payload"]["text"]

    def test_wrong_protocol_version_rejected(self, client):
        with client.websocket_connect("/ws") as ws:
            ws.send_text(json.dumps({"v": 99, "type": "pause",
                                     "seq": 1, "payload": {}}))
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "error"

    def test_spawn_obstacle_appears_in_state(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, "spawn_obstacle",
                 {"shape": {"kind": "ellipse", "a": 0.2, "b": 0.2},
                  "pose": [2.5, 2.5, 0.0], "velocity": [0.0, 0.0]})
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "info"
            for _ in range(100):
                st = recv_until(ws, "state")["payload"]
                if st["obstacles"]:
                    break
            else:
                raise AssertionError("spawned obstacle never reported")
            ob = st["obstacles"][0]
            assert ob["x"] == pytest.approx(2.5)

    def test_pause_stops_time(self, client):
        with client.websocket_connect("/ws") as ws:
            send(ws, "pause", {})
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "info"
            # drain a few frames so the pause has definitely been applied
            for _ in range(5):
                recv_until(ws, "state")
            t0 = recv_until(ws, "state")["payload"]["t"]
            ts = [recv_until(ws, "state")["payload"]["t"] for _ in range(5)]
            assert all(t == t0 for t in ts)
            send(ws, "resume", {})
            recv_event(ws)
            for _ in range(100):
                t1 = recv_until(ws, "state")["payload"]["t"]
                if t1 > t0:
                    break
            else:
                raise AssertionError("time never advanced after resume")

    def test_set_params_horizon_range_rejected(self, client):
        with client.websocket_connect("/ws") as ws:
            # n_t = 2, dt_field = 0.1: horizon 10 x 0.05 s exceeds 0.1 s
            send(ws, "set_params", {"N": 10})
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "error"
            assert "horizon" in ev["payload"]["text"]
            send(ws, "set_params", {"rho": 0.9})
            ev = recv_event(ws)
            assert ev["payload"]["level"] == "info"
