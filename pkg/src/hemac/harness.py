"""Benchmark harness: seeded episode batches, metrics, CSV output.

Episode k of a batch runs with seed base_seed + k and a policy stream derived
from the same seed, so batches are reproducible row by row. The CSV is byte
stable apart from the wall_time_s column, which reports real elapsed time.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .adapters import PaddedEnv
from .baselines import make_policy
from .env import Environment
from .replay import ReplayRecord, write_replay

CSV_COLUMNS = "scenario,seed,team_return,reaches,retrieves,collision_steps,oob_steps,wall_time_s"


@dataclass(slots=True)
class EpisodeMetrics:
    scenario_id: str
    seed: int
    team_return: float
    reaches: int
    retrieves: int
    collision_steps: int
    oob_steps: int
    wall_time_s: float

    def identity_holds(self) -> bool:
        return self.team_return == (
            10.0 * self.reaches
            + 25.0 * self.retrieves
            - 20.0 * self.collision_steps
            - 20.0 * self.oob_steps
        )


def run_episode(env, policy, seed: int, record: list[ReplayRecord] | None = None) -> EpisodeMetrics:
    """Roll one full episode; optionally append replay records."""
    env.reset(seed)
    t0 = time.perf_counter()
    base = env  # PaddedEnv proxies the attributes used here
    while not base.truncated:
        agent = base.current_agent
        action = policy.act(env, agent)
        mode = "discrete" if isinstance(action, (int, np.integer)) else "continuous"
        cycle = base.world_step
        out = env.step(action, mode)
        if record is not None:
            record.append(
                ReplayRecord(cycle, agent, mode, action, out.info["team_reward"])
            )
    wall = time.perf_counter() - t0
    return EpisodeMetrics(
        scenario_id=base.scenario.id,
        seed=seed,
        team_return=base.cumulative_return,
        reaches=base.reach_count,
        retrieves=base.retrieve_count,
        collision_steps=base.collision_steps,
        oob_steps=base.oob_steps,
        wall_time_s=wall,
    )


def summarize(metrics: list[EpisodeMetrics]) -> dict:
    """Mean / sample std / normal-approximation 95% CI of team return."""
    returns = [m.team_return for m in metrics]
    n = len(returns)
    mean = sum(returns) / n
    if n > 1:
        var = sum((r - mean) ** 2 for r in returns) / (n - 1)
        std = math.sqrt(var)
    else:
        std = 0.0
    half = 1.96 * std / math.sqrt(n) if n else 0.0
    return {
        "episodes": n,
        "mean_return": mean,
        "std_return": std,
        "ci95_low": mean - half,
        "ci95_high": mean + half,
        "mean_reaches": sum(m.reaches for m in metrics) / n,
        "mean_retrieves": sum(m.retrieves for m in metrics) / n,
    }


def run_batch(
    scenario_id: str,
    policy_name: str,
    episodes: int,
    base_seed: int,
    mode: str = "discrete",
    padded: bool = False,
    record_dir=None,
) -> tuple[list[EpisodeMetrics], dict]:
    """Seeded batch of episodes; metrics are sorted by seed."""
    env = Environment(scenario_id)
    driver = PaddedEnv(env) if padded else env
    if record_dir is not None:
        record_dir = Path(record_dir)
        record_dir.mkdir(parents=True, exist_ok=True)
    metrics = []
    for k in range(episodes):
        seed = base_seed + k
        policy = make_policy(policy_name, seed, mode)
        records: list[ReplayRecord] | None = [] if record_dir is not None else None
        m = run_episode(driver, policy, seed, records)
        if record_dir is not None:
            write_replay(
                record_dir / f"{scenario_id}_{seed}.jsonl",
                scenario_id,
                seed,
                records,
                m.team_return,
            )
        metrics.append(m)
    metrics.sort(key=lambda m: m.seed)
    return metrics, summarize(metrics)


def metrics_csv(metrics: list[EpisodeMetrics]) -> str:
    lines = [CSV_COLUMNS]
    for m in sorted(metrics, key=lambda m: m.seed):
        lines.append(
            f"{m.scenario_id},{m.seed},{m.team_return!r},{m.reaches},"
            f"{m.retrieves},{m.collision_steps},{m.oob_steps},{m.wall_time_s:.6f}"
        )
    return "\n".join(lines) + "\n"


def write_metrics_csv(path, metrics: list[EpisodeMetrics]) -> None:
    Path(path).write_text(metrics_csv(metrics), encoding="utf-8")


def record_replay(scenario_id: str, policy_name: str, seed: int, path, mode: str = "discrete") -> EpisodeMetrics:
    """Run one policy episode and persist it as a replay file."""
    env = Environment(scenario_id)
    policy = make_policy(policy_name, seed, mode)
    records: list[ReplayRecord] = []
    m = run_episode(env, policy, seed, records)
    write_replay(path, scenario_id, seed, records, m.team_return)
    return m
