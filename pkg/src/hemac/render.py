"""Static frame rendering from replay files.

Re-executes a replay and saves one SVG per sampled world step: obstacles in
red, the recharge base in blue, roads in grey, targets in green, agents as
per-type glyphs. Output bytes are deterministic for a given replay (fixed
hash salt, no timestamps), so frames can be diffed across runs.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.lines import Line2D
from matplotlib.patches import Rectangle

from .agents import OBSERVER_SPEED
from .env import CARRIED, Environment, FIELD
from .replay import ReplayLog, load_replay, replay_execute

OBSTACLE_COLOR = "#d62728"  # red
BASE_COLOR = "#1f77b4"  # blue
ROAD_COLOR = "#9e9e9e"  # grey
TARGET_COLOR = "#2ca02c"  # green
QUAD_COLOR = "#111111"
OBSERVER_COLOR = "#7b2d8b"
PROVISIONER_COLOR = "#e07b00"


def draw_frame(env: Environment, path) -> None:
    """Render the current world state of env to an SVG file."""
    plt.rcParams["svg.hashsalt"] = "hemac"
    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    arena = env.map.arena
    ax.set_xlim(arena.min.x, arena.max.x)
    ax.set_ylim(arena.min.y, arena.max.y)
    ax.set_aspect("equal")
    ax.set_title(f"{env.scenario.id}  step {env.world_step}")

    roads = env.map.roads
    if roads is not None:
        for a, b, _ in roads.edges:
            pa, pb = roads.nodes[a], roads.nodes[b]
            ax.add_line(
                Line2D([pa.x, pb.x], [pa.y, pb.y], color=ROAD_COLOR, linewidth=2.0, zorder=1)
            )
    for box in env.map.obstacles:
        ax.add_patch(
            Rectangle(
                (box.min.x, box.min.y),
                box.max.x - box.min.x,
                box.max.y - box.min.y,
                facecolor=OBSTACLE_COLOR,
                edgecolor="none",
                zorder=2,
            )
        )
    base = env.map.base
    if base is not None:
        fp = base.footprint()
        ax.add_patch(
            Rectangle(
                (fp.min.x, fp.min.y),
                2 * base.half_extent,
                2 * base.half_extent,
                facecolor=BASE_COLOR,
                alpha=0.7,
                edgecolor="none",
                zorder=2,
            )
        )

    field = [t.pos for t in env.targets if t.phase == FIELD]
    if field:
        ax.plot(
            [p.x for p in field],
            [p.y for p in field],
            linestyle="none",
            marker="s",
            markersize=6,
            color=TARGET_COLOR,
            zorder=4,
        )
    carried = [t.pos for t in env.targets if t.phase == CARRIED]
    if carried:
        ax.plot(
            [p.x for p in carried],
            [p.y for p in carried],
            linestyle="none",
            marker="s",
            markersize=4,
            markerfacecolor="none",
            markeredgecolor=TARGET_COLOR,
            zorder=5,
        )

    if env.quads:
        ax.plot(
            [q.pos.x for q in env.quads],
            [q.pos.y for q in env.quads],
            linestyle="none",
            marker="o",
            markersize=5,
            color=QUAD_COLOR,
            zorder=6,
        )
    for o in env.observers:
        ax.plot([o.pos.x], [o.pos.y], linestyle="none", marker="^", markersize=7,
                color=OBSERVER_COLOR, zorder=6)
        tip = 0.6 * OBSERVER_SPEED
        ax.add_line(
            Line2D(
                [o.pos.x, o.pos.x + tip * math.cos(o.heading)],
                [o.pos.y, o.pos.y + tip * math.sin(o.heading)],
                color=OBSERVER_COLOR,
                linewidth=1.0,
                zorder=6,
            )
        )
    if env.provisioners:
        positions = [p.position(env.map.roads) for p in env.provisioners]
        ax.plot(
            [p.x for p in positions],
            [p.y for p in positions],
            linestyle="none",
            marker="s",
            markersize=6,
            color=PROVISIONER_COLOR,
            zorder=6,
        )

    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_frames(replay_path, out_dir, every: int) -> list[Path]:
    """Sample the replay every `every` world steps and render each to SVG."""
    if every <= 0:
        raise ValueError("every must be positive")
    log: ReplayLog = load_replay(replay_path)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def on_world_step(env: Environment) -> None:
        if env.world_step % every == 0:
            path = out / f"frame_{env.world_step:06d}.svg"
            draw_frame(env, path)
            written.append(path)

    replay_execute(log, on_world_step)
    return written
