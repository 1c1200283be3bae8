"""Stream-socket rollout service for remote learners.

Wire format: each message is a 4-byte big-endian length followed by that many
bytes of UTF-8 JSON. One request frame yields exactly one response frame.
Requests carry an "op" field; responses carry ok=true plus op fields, or
ok=false with an error code. Sessions are per-connection and fully isolated.
"""

from __future__ import annotations

import json
import socketserver
import struct

from . import ENGINE
from .adapters import PaddedEnv
from .env import Environment, SteppedAfterEndError
from .scenarios import UnknownScenarioError

PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 16 * 1024 * 1024


class MalformedFrameError(ValueError):
    pass


def read_frame(rfile) -> dict | None:
    """One request object, or None on clean EOF."""
    head = rfile.read(4)
    if head == b"":
        return None
    if len(head) < 4:
        raise MalformedFrameError("short length prefix")
    (length,) = struct.unpack(">I", head)
    if length > MAX_FRAME_BYTES:
        raise MalformedFrameError(f"frame of {length} bytes exceeds the 16 MiB cap")
    payload = rfile.read(length)
    if len(payload) < length:
        raise MalformedFrameError("truncated frame payload")
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedFrameError(f"payload is not JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedFrameError("payload must be a JSON object")
    return obj


def write_frame(wfile, obj: dict) -> None:
    payload = json.dumps(obj, separators=(",", ":")).encode("utf-8")
    wfile.write(struct.pack(">I", len(payload)) + payload)
    wfile.flush()


def _err(code: str, message: str) -> dict:
    return {"ok": False, "error": code, "message": message}


class Session:
    """Per-connection protocol state machine."""

    def __init__(self, padded_default: bool = False):
        self.env: Environment | None = None
        self.driver = None  # env or PaddedEnv
        self.padded = padded_default

    # -- op handlers ----------------------------------------------------

    def handle(self, req: dict) -> tuple[dict, bool]:
        """Returns (response, keep_connection_open)."""
        op = req.get("op")
        if op == "hello":
            if "padded" in req:
                self.padded = bool(req["padded"])
            return {"ok": True, "protocol": PROTOCOL_VERSION, "engine": ENGINE}, True
        if op == "close":
            return {"ok": True}, False
        if op == "reset":
            return self._op_reset(req), True
        if op == "step":
            return self._op_step(req), True
        if op == "observe":
            return self._op_observe(req), True
        if op == "state":
            return self._op_state(), True
        if op == "spec":
            return self._op_spec(req), True
        return _err("unknown_op", f"unsupported op {op!r}"), True

    def _op_reset(self, req: dict) -> dict:
        scenario_id = req.get("scenario")
        seed = req.get("seed", 0)
        try:
            env = Environment(scenario_id)
        except UnknownScenarioError:
            return _err("unknown_scenario", f"no scenario named {scenario_id!r}")
        if not isinstance(seed, int):
            return _err("bad_request", "seed must be an integer")
        self.env = env
        self.driver = PaddedEnv(env) if self.padded else env
        agent, obs = self.driver.reset(seed)
        return {
            "ok": True,
            "agents": list(env.agent_order),
            "current": agent,
            "obs": obs.tolist(),
        }

    def _require_env(self) -> dict | None:
        if self.env is None:
            return _err("no_episode", "reset a scenario first")
        return None

    def _op_step(self, req: dict) -> dict:
        missing = self._require_env()
        if missing:
            return missing
        env = self.env
        agent = req.get("agent")
        if agent != env.current_agent:
            return _err(
                "wrong_agent",
                f"it is {env.current_agent!r}'s turn, not {agent!r}",
            )
        action = req.get("action")
        if not isinstance(action, dict) or "mode" not in action or "value" not in action:
            return _err("bad_request", "action must be {mode, value}")
        mode = action["mode"]
        value = action["value"]
        if mode not in ("discrete", "continuous"):
            return _err("bad_request", f"unknown action mode {mode!r}")
        if mode == "discrete":
            if not isinstance(value, int):
                return _err("bad_request", "discrete action value must be an integer")
        else:
            if not isinstance(value, list) or not all(
                isinstance(v, (int, float)) for v in value
            ):
                return _err("bad_request", "continuous action value must be a number list")
        try:
            out = self.driver.step(value if mode == "discrete" else list(map(float, value)), mode)
        except SteppedAfterEndError:
            return _err("episode_over", "the episode already ended; reset to continue")
        if out.truncated:
            next_agent = None
            obs = None
        else:
            next_agent = env.current_agent
            obs = self.driver.observe(next_agent).tolist()
        return {
            "ok": True,
            "reward": out.info["team_reward"],
            "rewards": list(out.rewards),
            "truncated": out.truncated,
            "next_agent": next_agent,
            "obs": obs,
            "info": out.info,
            "world_step": env.world_step,
        }

    def _op_observe(self, req: dict) -> dict:
        missing = self._require_env()
        if missing:
            return missing
        agent = req.get("agent")
        if agent not in self.env._index_of:
            return _err("unknown_agent", f"no agent named {agent!r}")
        return {"ok": True, "agent": agent, "obs": self.driver.observe(agent).tolist()}

    def _op_state(self) -> dict:
        missing = self._require_env()
        if missing:
            return missing
        state = self.env.global_state()
        return {"ok": True, "state": state.tolist(), "length": int(len(state))}

    def _op_spec(self, req: dict) -> dict:
        scenario_id = req.get("scenario")
        if scenario_id is not None:
            try:
                probe = Environment(scenario_id)
            except UnknownScenarioError:
                return _err("unknown_scenario", f"no scenario named {scenario_id!r}")
            meta = probe.metadata()
        else:
            missing = self._require_env()
            if missing:
                return missing
            meta = self.env.metadata()
        resp = {"ok": True, "padded": self.padded, **meta}
        if self.padded:
            try:
                env = self.env if self.env is not None else Environment(scenario_id)
            except UnknownScenarioError:
                return _err("unknown_scenario", f"no scenario named {scenario_id!r}")
            unified = PaddedEnv(env).unified
            resp["unified"] = {
                "obs_dim": unified.obs_dim,
                "discrete_n": unified.discrete_cardinality,
                "continuous_dims": unified.continuous_dims,
                "masks": {k: list(v) for k, v in unified.masks.items()},
            }
        return resp


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = Session(self.server.padded_default)
        while True:
            try:
                req = read_frame(self.rfile)
            except MalformedFrameError as exc:
                try:
                    write_frame(self.wfile, _err("malformed", str(exc)))
                except OSError:
                    pass
                return  # close connection on framing errors
            if req is None:
                return
            resp, keep_open = session.handle(req)
            try:
                write_frame(self.wfile, resp)
            except OSError:
                return
            if not keep_open:
                return


class RolloutServer(socketserver.ThreadingTCPServer):
    """One worker thread per connection; sessions share nothing."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], padded_default: bool = False):
        super().__init__(address, _Handler)
        self.padded_default = padded_default


def parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port:
        raise ValueError(f"bind address must be host:port, got {bind!r}")
    return host, int(port)


def serve(bind: str, padded: bool = False) -> None:
    """Run the rollout service until interrupted."""
    address = parse_bind(bind)
    with RolloutServer(address, padded_default=padded) as server:
        host, port = server.server_address[:2]
        print(f"hemac rollout server listening on {host}:{port}", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
