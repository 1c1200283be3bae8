import json
import socket
import struct
import threading

import numpy as np
import pytest

from hemac.env import Environment
from hemac.sensing import global_state_length
from hemac.server import (
    PROTOCOL_VERSION,
    RolloutServer,
    Session,
    parse_bind,
)


class TestSessionOps:
    def test_hello(self):
        resp, keep = Session().handle({"op": "hello"})
        assert keep
        assert resp["ok"] and resp["protocol"] == PROTOCOL_VERSION
        assert resp["engine"].startswith("hemac ")

    def test_reset_matches_in_process(self):
        s = Session()
        resp, _ = s.handle({"op": "reset", "scenario": "fleet_3q1o", "seed": 7})
        assert resp["ok"]
        env = Environment("fleet_3q1o")
        agent, obs = env.reset(7)
        assert resp["agents"] == env.agent_order
        assert resp["current"] == agent
        assert resp["obs"] == obs.tolist()

    def test_unknown_scenario(self):
        resp, keep = Session().handle({"op": "reset", "scenario": "outpost_9", "seed": 0})
        assert keep
        assert not resp["ok"] and resp["error"] == "unknown_scenario"

    def test_step_equivalence_and_cursor(self):
        s = Session()
        s.handle({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 3})
        env = Environment("simple_fleet_1q1o")
        env.reset(3)
        for action in (3, 1, 0, 2, 5, 1):
            agent = env.current_agent
            out = env.step(action)
            resp, _ = s.handle(
                {"op": "step", "agent": agent, "action": {"mode": "discrete", "value": action}}
            )
            assert resp["ok"]
            assert resp["reward"] == out.info["team_reward"]
            assert resp["rewards"] == list(out.rewards)
            assert resp["truncated"] == out.truncated
            if not out.truncated:
                assert resp["next_agent"] == env.current_agent
                assert resp["obs"] == env.observe(env.current_agent).tolist()

    def test_wrong_agent_does_not_mutate(self):
        s = Session()
        s.handle({"op": "reset", "scenario": "fleet_3q1o", "seed": 1})
        resp, _ = s.handle(
            {"op": "step", "agent": "quad_2", "action": {"mode": "discrete", "value": 0}}
        )
        assert not resp["ok"] and resp["error"] == "wrong_agent"
        # the cursor is still at quad_0 and a correct step works
        resp, _ = s.handle(
            {"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 0}}
        )
        assert resp["ok"] and resp["next_agent"] == "quad_1"

    def test_continuous_action(self):
        s = Session()
        s.handle({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 3})
        resp, _ = s.handle(
            {"op": "step", "agent": "quad_0", "action": {"mode": "continuous", "value": [0.5, -0.5]}}
        )
        assert resp["ok"]

    def test_no_episode_guards(self):
        s = Session()
        for req in (
            {"op": "state"},
            {"op": "observe", "agent": "quad_0"},
            {"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 0}},
            {"op": "spec"},
        ):
            resp, keep = s.handle(req)
            assert keep
            assert not resp["ok"] and resp["error"] == "no_episode"

    def test_state_matches_in_process(self):
        s = Session()
        s.handle({"op": "reset", "scenario": "complex_fleet_3q1o1p", "seed": 4})
        resp, _ = s.handle({"op": "state"})
        env = Environment("complex_fleet_3q1o1p")
        env.reset(4)
        assert resp["ok"]
        assert resp["state"] == env.global_state().tolist()
        assert resp["length"] == global_state_length(5, 3)

    def test_spec_op(self):
        s = Session()
        resp, _ = s.handle({"op": "spec", "scenario": "complex_fleet_5q1o2p"})
        assert resp["ok"]
        assert resp["agents"]["quad_0"]["obs_len"] == 31
        assert resp["agents"]["obs_0"]["discrete_n"] == 3
        assert resp["agents"]["prov_1"]["continuous_dims"] == 2
        assert resp["padded"] is False

    def test_unknown_op_keeps_connection(self):
        s = Session()
        resp, keep = s.handle({"op": "meditate"})
        assert keep
        assert not resp["ok"] and resp["error"] == "unknown_op"

    def test_close(self):
        resp, keep = Session().handle({"op": "close"})
        assert resp["ok"] and not keep

    def test_bad_action_payloads(self):
        s = Session()
        s.handle({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 0})
        for bad in (
            {"op": "step", "agent": "quad_0"},
            {"op": "step", "agent": "quad_0", "action": {"mode": "discrete"}},
            {"op": "step", "agent": "quad_0", "action": {"mode": "warp", "value": 1}},
            {"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": "N"}},
            {"op": "step", "agent": "quad_0", "action": {"mode": "continuous", "value": "x"}},
        ):
            resp, _ = s.handle(bad)
            assert not resp["ok"] and resp["error"] == "bad_request"

    def test_reset_abandons_live_episode(self):
        s = Session()
        s.handle({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 0})
        s.handle({"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 3}})
        resp, _ = s.handle({"op": "reset", "scenario": "fleet_3q1o", "seed": 1})
        assert resp["ok"] and resp["current"] == "quad_0"
        assert s.env.scenario.id == "fleet_3q1o"


class TestPaddedSession:
    def test_padded_spaces_end_to_end(self):
        s = Session()
        s.handle({"op": "hello", "padded": True})
        resp, _ = s.handle({"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 2})
        assert len(resp["obs"]) == 31
        s.handle({"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 0}})
        resp, _ = s.handle({"op": "observe", "agent": "obs_0"})
        assert len(resp["obs"]) == 31
        # unified index 8 is masked-invalid for the observer: accepted, no-op
        resp, _ = s.handle(
            {"op": "step", "agent": "obs_0", "action": {"mode": "discrete", "value": 8}}
        )
        assert resp["ok"]
        assert not resp["info"]["bad_action"]

    def test_spec_includes_unified_block(self):
        s = Session()
        s.handle({"op": "hello", "padded": True})
        resp, _ = s.handle({"op": "spec", "scenario": "fleet_3q1o"})
        assert resp["padded"] is True
        assert resp["unified"]["obs_dim"] == 31
        assert resp["unified"]["discrete_n"] == 9
        assert resp["unified"]["masks"]["observer"][:3] == [True, True, True]


# ---------------------------------------------------------------------------
# transport-level tests over a real loopback socket


def send_frame(sock, obj):
    payload = json.dumps(obj).encode()
    sock.sendall(struct.pack(">I", len(payload)) + payload)


def recv_frame(sock):
    head = b""
    while len(head) < 4:
        chunk = sock.recv(4 - len(head))
        if not chunk:
            return None
        head += chunk
    (length,) = struct.unpack(">I", head)
    data = b""
    while len(data) < length:
        chunk = sock.recv(length - len(data))
        if not chunk:
            return None
        data += chunk
    return json.loads(data.decode())


@pytest.fixture()
def live_server():
    server = RolloutServer(("127.0.0.1", 0))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server.server_address
    server.shutdown()
    server.server_close()


class TestTransport:
    def test_round_trip(self, live_server):
        with socket.create_connection(live_server) as sock:
            send_frame(sock, {"op": "hello"})
            assert recv_frame(sock)["protocol"] == PROTOCOL_VERSION
            send_frame(sock, {"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 5})
            resp = recv_frame(sock)
            assert resp["ok"] and resp["current"] == "quad_0"
            send_frame(
                sock,
                {"op": "step", "agent": "quad_0", "action": {"mode": "discrete", "value": 3}},
            )
            assert recv_frame(sock)["ok"]

    def test_malformed_frame_errors_then_closes(self, live_server):
        with socket.create_connection(live_server) as sock:
            sock.sendall(struct.pack(">I", 11) + b"not json!!!")
            resp = recv_frame(sock)
            assert resp["error"] == "malformed"
            assert sock.recv(1) == b""  # server hung up

    def test_oversized_frame_rejected(self, live_server):
        with socket.create_connection(live_server) as sock:
            sock.sendall(struct.pack(">I", 17 * 1024 * 1024))
            resp = recv_frame(sock)
            assert resp["error"] == "malformed"

    def test_sessions_are_isolated(self, live_server):
        with socket.create_connection(live_server) as a, socket.create_connection(live_server) as b:
            send_frame(a, {"op": "reset", "scenario": "simple_fleet_1q1o", "seed": 1})
            recv_frame(a)
            send_frame(b, {"op": "state"})
            assert recv_frame(b)["error"] == "no_episode"

    def test_loopback_rollout_equivalence(self, live_server):
        env = Environment("fleet_3q1o")
        env.reset(42)
        with socket.create_connection(live_server) as sock:
            send_frame(sock, {"op": "reset", "scenario": "fleet_3q1o", "seed": 42})
            resp = recv_frame(sock)
            assert resp["obs"] == env.observe("quad_0").tolist()
            from hemac.geometry import RngStream

            rng = RngStream(0)
            for _ in range(200):
                agent = env.current_agent
                spec = env.action_spec(agent)
                action = rng.randrange(spec.discrete_cardinality)
                out = env.step(action)
                send_frame(
                    sock,
                    {"op": "step", "agent": agent, "action": {"mode": "discrete", "value": action}},
                )
                resp = recv_frame(sock)
                assert resp["ok"]
                assert resp["reward"] == out.info["team_reward"]
                assert resp["rewards"] == list(out.rewards)
                if not out.truncated:
                    assert resp["obs"] == env.observe(env.current_agent).tolist()

    def test_parse_bind(self):
        assert parse_bind("0.0.0.0:7777") == ("0.0.0.0", 7777)
        with pytest.raises(ValueError):
            parse_bind("nope")
