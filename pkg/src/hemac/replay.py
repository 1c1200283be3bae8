"""Episode replay logs: record, load, verify, re-execute.

A replay is a line-oriented UTF-8 file: a header object, one record per
agent-step, and a footer carrying the final team return plus a CRC over all
preceding lines. Verification re-runs the actions through the engine and
demands the recorded per-step rewards and final return match exactly; the
CRC catches any mutation that happens to be reward-neutral.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import ENGINE
from .env import Environment

REPLAY_KIND = "hemac-replay"
REPLAY_FORMAT = 1


class CorruptReplayError(ValueError):
    """Unparseable, truncated, or version-incompatible replay file."""


@dataclass(slots=True)
class ReplayRecord:
    cycle: int
    agent: str
    mode: str
    action: int | list[float]
    reward: float  # team reward paid out by this step call


@dataclass(slots=True)
class ReplayLog:
    scenario_id: str
    seed: int
    engine: str
    records: list[ReplayRecord]
    team_return: float
    checksum: int


def _record_line(rec: ReplayRecord) -> str:
    return json.dumps(
        {
            "cycle": rec.cycle,
            "agent": rec.agent,
            "mode": rec.mode,
            "action": rec.action,
            "reward": rec.reward,
        },
        separators=(",", ":"),
    )


def _header_line(scenario_id: str, seed: int) -> str:
    return json.dumps(
        {
            "kind": REPLAY_KIND,
            "format": REPLAY_FORMAT,
            "scenario": scenario_id,
            "seed": seed,
            "engine": ENGINE,
        },
        separators=(",", ":"),
    )


def write_replay(path, scenario_id: str, seed: int, records: list[ReplayRecord], team_return: float) -> None:
    lines = [_header_line(scenario_id, seed)]
    lines.extend(_record_line(r) for r in records)
    crc = 0
    for line in lines:
        crc = zlib.crc32(line.encode("utf-8"), crc)
    footer = json.dumps(
        {"team_return": team_return, "records": len(records), "checksum": crc},
        separators=(",", ":"),
    )
    Path(path).write_text("\n".join(lines + [footer]) + "\n", encoding="utf-8")


def load_replay(path) -> ReplayLog:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptReplayError(f"unreadable replay: {exc}") from exc
    lines = text.splitlines()
    if len(lines) < 2:
        raise CorruptReplayError("replay too short")
    try:
        header = json.loads(lines[0])
        footer = json.loads(lines[-1])
        body = [json.loads(line) for line in lines[1:-1]]
    except json.JSONDecodeError as exc:
        raise CorruptReplayError(f"bad replay framing: {exc}") from exc
    if header.get("kind") != REPLAY_KIND:
        raise CorruptReplayError("not a replay file")
    if header.get("format") != REPLAY_FORMAT:
        raise CorruptReplayError(f"unsupported replay format {header.get('format')!r}")
    for key in ("scenario", "seed"):
        if key not in header:
            raise CorruptReplayError(f"header missing {key!r}")
    if not all(k in footer for k in ("team_return", "records", "checksum")):
        raise CorruptReplayError("footer missing fields (truncated file?)")
    if footer["records"] != len(body):
        raise CorruptReplayError("record count mismatch (truncated file?)")
    records = []
    for obj in body:
        try:
            records.append(
                ReplayRecord(obj["cycle"], obj["agent"], obj["mode"], obj["action"], obj["reward"])
            )
        except (KeyError, TypeError) as exc:
            raise CorruptReplayError(f"bad record: {exc}") from exc
    return ReplayLog(
        scenario_id=header["scenario"],
        seed=header["seed"],
        engine=header.get("engine", ""),
        records=records,
        team_return=footer["team_return"],
        checksum=footer["checksum"],
    )


def _recompute_checksum(path) -> int:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    crc = 0
    for line in lines[:-1]:
        crc = zlib.crc32(line.encode("utf-8"), crc)
    return crc


def replay_execute(
    log: ReplayLog,
    on_world_step: Callable[[Environment], None] | None = None,
) -> tuple[bool, Environment]:
    """Re-run the log; returns (rewards-and-return-matched, final env)."""
    env = Environment(log.scenario_id)
    env.reset(log.seed)
    ok = True
    for rec in log.records:
        if env.truncated or rec.agent != env.current_agent:
            return False, env
        action = rec.action if rec.mode == "discrete" else list(rec.action)
        out = env.step(action, rec.mode)
        if out.info["team_reward"] != rec.reward:
            ok = False
        if on_world_step is not None and env.cursor == 0:
            on_world_step(env)
    if env.cumulative_return != log.team_return:
        ok = False
    return ok, env


def replay_verify(path) -> bool:
    """True iff the file is intact and re-execution reproduces it exactly."""
    log = load_replay(path)
    if _recompute_checksum(path) != log.checksum:
        return False
    ok, _env = replay_execute(log)
    return ok
