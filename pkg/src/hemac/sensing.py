"""Field-of-view sensing, observation vectors, comms, and the global state.

Observation layouts are fixed-length per agent type with nearest-first slot
fills and validity flags, so learner interfaces never change shape within a
scenario. Everything an agent cannot currently sense is exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .agents import OBSERVER, PROVISIONER, QUADCOPTER, ObserverState
from .geometry import SectorFov, Vec2, aabb_closest_point, in_sector
from .mapgen import ARENA_SIZE, ScenarioMap
from .scenarios import Challenge

FOV_BY_TYPE = {
    QUADCOPTER: SectorFov(60.0, math.pi),
    OBSERVER: SectorFov(250.0, math.pi / 6.0),
    PROVISIONER: SectorFov(80.0, math.pi),
}

COMM_GATE_RANGE = 150.0  # max distance to a building for transmission
MESSAGE_AGE_MAX = 255

OBSERVATION_LENGTHS = {QUADCOPTER: 31, OBSERVER: 26, PROVISIONER: 29}

AGENT_TYPE_CODES = {QUADCOPTER: 1, OBSERVER: 2, PROVISIONER: 3}

TARGET = "target"
OBSTACLE = "obstacle"
AGENT = "agent"

# Per-agent block in the global state: one-hot over the widest discrete
# space plus the widest continuous space.
UNIFIED_ACTION_BLOCK = 9 + 2
ROAD_NODE_SLOTS = 25
ROAD_EDGE_SLOTS = 40


@dataclass(slots=True)
class Detection:
    kind: str
    rel: Vec2  # relative to the sensing agent
    meta: int = 0  # agent type code for kind == "agent", else 0
    battery: float | None = None  # populated for detected quadcopters


@dataclass(slots=True)
class CommMessage:
    target_pos: Vec2  # absolute
    age: int  # world steps since emission, saturating at MESSAGE_AGE_MAX


def comm_gate_open(pos: Vec2, scenario_map: ScenarioMap, challenge: Challenge) -> bool:
    """Whether an observer at pos may transmit right now."""
    if challenge is Challenge.SIMPLE_FLEET:
        return True
    gate2 = COMM_GATE_RANGE * COMM_GATE_RANGE
    x = pos.x
    y = pos.y
    for box in scenario_map.obstacles.boxes:
        dx = box.min.x - x
        if dx < 0.0:
            dx = x - box.max.x
            if dx < 0.0:
                dx = 0.0
        dy = box.min.y - y
        if dy < 0.0:
            dy = y - box.max.y
            if dy < 0.0:
                dy = 0.0
        if dx * dx + dy * dy <= gate2:
            return True
    return False


def comm_transmit(
    state: ObserverState,
    detections: list[Detection],
    scenario_map: ScenarioMap,
    challenge: Challenge,
) -> list[CommMessage]:
    """Fresh messages for every detected target, if the gate holds."""
    if not comm_gate_open(state.pos, scenario_map, challenge):
        return []
    out = []
    for d in detections:
        if d.kind == TARGET:
            out.append(CommMessage(Vec2(state.pos.x + d.rel.x, state.pos.y + d.rel.y), 0))
    return out


def sense(world, agent_id: str) -> list[Detection]:
    """All targets, obstacles, and other agents in the agent's field of view.

    Sorted by ascending distance. Obstacles are detected through their
    closest point and never occlude anything behind them. Only free-roaming
    targets are detectable; a carried target travels hidden with its carrier.
    """
    idx = world.agent_index(agent_id)
    kind = world.agent_kinds[idx]
    origin = world.agent_pos(idx)
    fov = FOV_BY_TYPE[kind]
    full_circle = fov.half_angle >= math.pi
    heading = world.agent_heading(idx)
    range2 = fov.range * fov.range

    def visible(p: Vec2) -> bool:
        if full_circle:
            dx = p.x - origin.x
            dy = p.y - origin.y
            return dx * dx + dy * dy <= range2
        return in_sector(origin, heading, fov, p)

    out: list[Detection] = []
    for t in world.targets:
        if t.phase == "field" and visible(t.pos):
            out.append(Detection(TARGET, t.pos - origin))
    for box in world.map.obstacles:
        cp = aabb_closest_point(box, origin)
        if visible(cp):
            out.append(Detection(OBSTACLE, cp - origin))
    for j in range(len(world.agent_kinds)):
        if j == idx:
            continue
        p = world.agent_pos(j)
        if visible(p):
            other_kind = world.agent_kinds[j]
            battery = world.quads[world.agent_sub_index(j)].battery if other_kind == QUADCOPTER else None
            out.append(Detection(AGENT, p - origin, AGENT_TYPE_CODES[other_kind], battery))
    out.sort(key=lambda d: d.rel.x * d.rel.x + d.rel.y * d.rel.y)
    return out


def _fill_slots(vec: np.ndarray, start: int, detections: list[Detection], count: int, scale: float) -> None:
    for s, d in enumerate(detections[:count]):
        base = start + 3 * s
        vec[base] = d.rel.x / scale
        vec[base + 1] = d.rel.y / scale
        vec[base + 2] = 1.0


def build_observation(world, agent_id: str, detections: list[Detection]) -> np.ndarray:
    """Assemble the fixed-layout observation vector for one agent."""
    idx = world.agent_index(agent_id)
    kind = world.agent_kinds[idx]
    sub = world.agent_sub_index(idx)
    pos = world.agent_pos(idx)
    targets = [d for d in detections if d.kind == TARGET]
    agents = [d for d in detections if d.kind == AGENT]

    if kind == QUADCOPTER:
        q = world.quads[sub]
        vec = np.zeros(31)
        vec[0] = pos.x / ARENA_SIZE
        vec[1] = pos.y / ARENA_SIZE
        vec[2] = q.vel.x / 10.0
        vec[3] = q.vel.y / 10.0
        vec[4] = q.battery / 100.0
        vec[5] = 1.0 if q.carrying else 0.0
        fov_range = FOV_BY_TYPE[QUADCOPTER].range
        _fill_slots(vec, 6, targets, 3, fov_range)
        obstacles = [d for d in detections if d.kind == OBSTACLE]
        _fill_slots(vec, 15, obstacles, 2, fov_range)
        _fill_slots(vec, 21, agents, 2, fov_range)
        msg = world.inboxes[sub]
        if msg is not None and msg.age < MESSAGE_AGE_MAX:
            vec[27] = (msg.target_pos.x - pos.x) / ARENA_SIZE
            vec[28] = (msg.target_pos.y - pos.y) / ARENA_SIZE
            vec[29] = msg.age / MESSAGE_AGE_MAX
            vec[30] = 1.0
    elif kind == OBSERVER:
        o = world.observers[sub]
        vec = np.zeros(26)
        vec[0] = pos.x / ARENA_SIZE
        vec[1] = pos.y / ARENA_SIZE
        vec[2] = math.cos(o.heading)
        vec[3] = math.sin(o.heading)
        vec[4] = 1.0 if comm_gate_open(pos, world.map, world.scenario.challenge) else 0.0
        fov_range = FOV_BY_TYPE[OBSERVER].range
        _fill_slots(vec, 5, targets, 5, fov_range)
        _fill_slots(vec, 20, agents, 2, fov_range)
    else:
        p = world.provisioners[sub]
        roads = world.map.roads
        a, b, length = roads.edges[p.edge]
        pa = roads.nodes[a]
        pb = roads.nodes[b]
        vec = np.zeros(29)
        vec[0] = pos.x / ARENA_SIZE
        vec[1] = pos.y / ARENA_SIZE
        vec[2] = (pb.x - pa.x) / length * p.direction
        vec[3] = (pb.y - pa.y) / length * p.direction
        vec[4] = p.progress
        node_ahead = b if p.direction > 0 else a
        ahead = roads.nodes[node_ahead]
        vec[5] = (ahead.x - pos.x) / ARENA_SIZE
        vec[6] = (ahead.y - pos.y) / ARENA_SIZE
        adjacency = roads.adjacency[node_ahead]
        vec[7] = len(adjacency) / 4.0
        for s, e in enumerate(adjacency[:4]):
            br = roads.outgoing_bearing(e, node_ahead)
            vec[8 + 2 * s] = math.cos(br)
            vec[9 + 2 * s] = math.sin(br)
        _fill_slots(vec, 16, targets, 2, FOV_BY_TYPE[PROVISIONER].range)
        base = world.map.base
        if base is not None:
            vec[22] = (base.center.x - pos.x) / ARENA_SIZE
            vec[23] = (base.center.y - pos.y) / ARENA_SIZE
        vec[24] = 1.0 if p.moving else 0.0
        nearest_quad = next((d for d in agents if d.meta == AGENT_TYPE_CODES[QUADCOPTER]), None)
        if nearest_quad is not None:
            vec[25] = nearest_quad.rel.x / ARENA_SIZE
            vec[26] = nearest_quad.rel.y / ARENA_SIZE
            vec[27] = (nearest_quad.battery or 0.0) / 100.0
            vec[28] = 1.0

    np.clip(vec, -1.0, 1.0, out=vec)
    return vec


def global_state_length(n_agents: int, n_targets: int) -> int:
    return (
        n_agents * (2 + 3 + UNIFIED_ACTION_BLOCK)
        + n_targets * 3
        + 1  # obstacle count
        + 2  # base position
        + ROAD_NODE_SLOTS * 2
        + ROAD_NODE_SLOTS
        + ROAD_EDGE_SLOTS * 2
        + ROAD_EDGE_SLOTS
    )


def build_global_state(world) -> np.ndarray:
    """Centralized-training state: everything, in canonical order.

    Layout per agent: position, type one-hot, last action in the unified
    (padded) encoding. Then per-target position plus carried flag, obstacle
    count, base position, and the road graph with validity masks. Absent
    structures are zero with zero masks.
    """
    n = len(world.agent_kinds)
    targets = world.targets
    vec = np.zeros(global_state_length(n, len(targets)))
    k = 0
    for i in range(n):
        pos = world.agent_pos(i)
        vec[k] = pos.x / ARENA_SIZE
        vec[k + 1] = pos.y / ARENA_SIZE
        code = AGENT_TYPE_CODES[world.agent_kinds[i]]
        vec[k + 1 + code] = 1.0
        last = world.last_actions[i]
        if last is not None:
            mode, value = last
            if mode == "discrete":
                vec[k + 5 + value] = 1.0
            else:
                for d, v in enumerate(value[:2]):
                    vec[k + 5 + 9 + d] = min(max(v, -1.0), 1.0)
        k += 5 + UNIFIED_ACTION_BLOCK
    for t in targets:
        if t.phase == "carried":
            carrier_pos = world.quads[t.carrier].pos
            vec[k] = carrier_pos.x / ARENA_SIZE
            vec[k + 1] = carrier_pos.y / ARENA_SIZE
            vec[k + 2] = 1.0
        else:
            vec[k] = t.pos.x / ARENA_SIZE
            vec[k + 1] = t.pos.y / ARENA_SIZE
        k += 3
    vec[k] = float(len(world.map.obstacles))
    k += 1
    if world.map.base is not None:
        vec[k] = world.map.base.center.x / ARENA_SIZE
        vec[k + 1] = world.map.base.center.y / ARENA_SIZE
    k += 2
    roads = world.map.roads
    node_block = k
    mask_block = node_block + ROAD_NODE_SLOTS * 2
    if roads is not None:
        for i, node in enumerate(roads.nodes[:ROAD_NODE_SLOTS]):
            vec[node_block + 2 * i] = node.x / ARENA_SIZE
            vec[node_block + 2 * i + 1] = node.y / ARENA_SIZE
            vec[mask_block + i] = 1.0
    k = mask_block + ROAD_NODE_SLOTS
    edge_block = k
    edge_mask = edge_block + ROAD_EDGE_SLOTS * 2
    if roads is not None:
        for i, (a, b, _) in enumerate(roads.edges[:ROAD_EDGE_SLOTS]):
            vec[edge_block + 2 * i] = float(a)
            vec[edge_block + 2 * i + 1] = float(b)
            vec[edge_mask + i] = 1.0
    return vec
