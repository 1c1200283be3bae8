"""Remote turn-based environment client for the hemac rollout protocol.

Protocol v1: 4-byte big-endian length prefix, UTF-8 JSON payloads, one
response per request. The client is protocol-only — it contains no
simulation logic, so the server stays the single source of truth for
dynamics. One client drives one connection and is not thread-safe.
"""

from __future__ import annotations

import json
import os
import socket
import struct
from typing import Iterator

SERVER_ENV_VAR = "HEMAC_SERVER"
PROTOCOL_VERSION = 1
MAX_FRAME_BYTES = 16 * 1024 * 1024


class RemoteEnvError(RuntimeError):
    """Base class for everything the client can raise."""


class ServerError(RemoteEnvError):
    """An ok=false response; carries the server's error code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class ProtocolError(RemoteEnvError):
    """Connection closed mid-frame or an unparseable response."""


class EpisodeCompleteError(RemoteEnvError):
    """step() after the episode was truncated."""


class NoEpisodeError(RemoteEnvError):
    """An operation that needs a live episode was called before reset."""


def _resolve_address(address: str | None) -> tuple[str, int]:
    target = address or os.environ.get(SERVER_ENV_VAR)
    if not target:
        raise RemoteEnvError(
            f"no server address: pass host:port or set {SERVER_ENV_VAR}"
        )
    host, _, port = target.rpartition(":")
    if not host or not port.isdigit():
        raise RemoteEnvError(f"server address must be host:port, got {target!r}")
    return host, int(port)


class RemoteEnv:
    """Turn-based multi-agent environment over a rollout-server connection.

    Mirrors the usual AEC surface: reset() -> first agent, agent_iter(),
    last() -> (observation, reward, terminated, truncated, info), step().
    Accessor values always reflect the most recent server response.
    """

    def __init__(self, address: str | None = None, padded: bool = False, timeout: float = 60.0):
        host, port = _resolve_address(address)
        self._sock = socket.create_connection((host, port), timeout=timeout)
        self._rfile = self._sock.makefile("rb")
        self.padded = padded
        hello = self._request({"op": "hello", "padded": padded})
        if hello.get("protocol") != PROTOCOL_VERSION:
            raise ProtocolError(f"server speaks protocol {hello.get('protocol')}, need {PROTOCOL_VERSION}")
        self.engine: str = hello.get("engine", "")
        self.scenario: str | None = None
        self.agents: list[str] = []
        self.agent_spaces: dict[str, dict] = {}
        self.unified_space: dict | None = None
        self.horizon: int | None = None
        self._current: str | None = None
        self._obs: list[float] | None = None
        self._reward = 0.0
        self._truncated = False
        self._info: dict = {}
        self.episode_return = 0.0

    # -- transport ------------------------------------------------------

    def _request(self, obj: dict) -> dict:
        payload = json.dumps(obj, separators=(",", ":")).encode("utf-8")
        self._sock.sendall(struct.pack(">I", len(payload)) + payload)
        head = self._rfile.read(4)
        if len(head) < 4:
            raise ProtocolError("connection closed while reading a response")
        (length,) = struct.unpack(">I", head)
        if length > MAX_FRAME_BYTES:
            raise ProtocolError(f"oversized response frame ({length} bytes)")
        body = self._rfile.read(length)
        if len(body) < length:
            raise ProtocolError("connection closed mid-frame")
        resp = json.loads(body.decode("utf-8"))
        if not resp.get("ok", False):
            code = resp.get("error", "unknown")
            message = resp.get("message", "")
            if code == "episode_over":
                raise EpisodeCompleteError(message)
            if code == "no_episode":
                raise NoEpisodeError(message)
            raise ServerError(code, message)
        return resp

    # -- episode control --------------------------------------------------

    def reset(self, scenario_id: str, seed: int) -> str:
        """Start an episode; returns the first agent to act."""
        resp = self._request({"op": "reset", "scenario": scenario_id, "seed": seed})
        self.scenario = scenario_id
        self.agents = list(resp["agents"])
        self._current = resp["current"]
        self._obs = resp["obs"]
        self._reward = 0.0
        self._truncated = False
        self._info = {}
        self.episode_return = 0.0
        spec = self._request({"op": "spec"})
        self.agent_spaces = spec["agents"]
        self.unified_space = spec.get("unified")
        self.horizon = spec.get("horizon")
        return self._current

    @property
    def current_agent(self) -> str | None:
        return self._current

    @property
    def truncated(self) -> bool:
        return self._truncated

    def last(self) -> tuple[list[float] | None, float, bool, bool, dict]:
        """(observation of the agent to act, last reward, terminated, truncated, info)."""
        if self.scenario is None:
            raise NoEpisodeError("reset a scenario first")
        return self._obs, self._reward, False, self._truncated, self._info

    def _space_for(self, agent_id: str) -> dict:
        space = self.agent_spaces.get(agent_id)
        if space is None:
            raise RemoteEnvError(f"unknown agent {agent_id!r}")
        if self.unified_space is not None:
            return {
                "discrete_n": self.unified_space["discrete_n"],
                "continuous_dims": self.unified_space["continuous_dims"],
            }
        return space

    def _validate(self, agent_id: str, action, mode: str) -> dict:
        # reject wrong shapes locally; never send a doomed frame
        space = self._space_for(agent_id)
        if mode == "discrete":
            if not isinstance(action, int) or isinstance(action, bool):
                raise TypeError("discrete actions must be plain integers")
            if not 0 <= action < space["discrete_n"]:
                raise ValueError(
                    f"discrete action {action} out of range 0..{space['discrete_n'] - 1}"
                )
            return {"mode": "discrete", "value": action}
        if isinstance(action, (str, bytes)) or not hasattr(action, "__iter__"):
            raise TypeError("continuous actions must be sequences of numbers")
        try:
            values = [float(v) for v in action]
        except (TypeError, ValueError) as exc:
            raise TypeError("continuous actions must be sequences of numbers") from exc
        if len(values) != space["continuous_dims"]:
            raise ValueError(
                f"continuous action needs {space['continuous_dims']} dims, got {len(values)}"
            )
        return {"mode": "continuous", "value": values}

    def step(self, action, mode: str | None = None) -> str | None:
        """Act for the current agent; returns the next agent (None at the end)."""
        if self.scenario is None:
            raise NoEpisodeError("reset a scenario first")
        if self._truncated:
            raise EpisodeCompleteError("episode is over; reset to continue")
        if mode is None:
            mode = "discrete" if isinstance(action, int) and not isinstance(action, bool) else "continuous"
        payload = self._validate(self._current, action, mode)
        resp = self._request({"op": "step", "agent": self._current, "action": payload})
        self._reward = resp["reward"]
        self.episode_return += resp["reward"]
        self._truncated = resp["truncated"]
        self._info = resp.get("info", {})
        self._current = resp["next_agent"]
        self._obs = resp["obs"]
        return self._current

    def agent_iter(self, max_steps: int | None = None) -> Iterator[str]:
        """Yield the agent whose turn it is until the episode truncates."""
        steps = 0
        while not self._truncated and (max_steps is None or steps < max_steps):
            if self._current is None:
                return
            yield self._current
            steps += 1

    # -- queries ----------------------------------------------------------

    def observe(self, agent_id: str) -> list[float]:
        return self._request({"op": "observe", "agent": agent_id})["obs"]

    def state(self) -> list[float]:
        """Centralized-training global state (never part of observations)."""
        return self._request({"op": "state"})["state"]

    # -- lifecycle ---------------------------------------------------------

    def close(self) -> None:
        try:
            self._request({"op": "close"})
        except RemoteEnvError:
            pass
        finally:
            self._rfile.close()
            self._sock.close()

    def __enter__(self) -> "RemoteEnv":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
