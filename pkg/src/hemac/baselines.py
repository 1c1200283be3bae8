"""Rule-based comparison policies: per-type heuristics and a random floor.

The heuristics read privileged structured state (exact own pose, message
objects, typed detections) rather than flat observation vectors; they exist
to anchor benchmark numbers, not to be learners. All of them are
deterministic except the provisioner's branch draw, which consumes a
policy-owned stream, never the environment's.
"""

from __future__ import annotations

import math

from .agents import (
    OBSERVER,
    PROVISIONER,
    QUADCOPTER,
    ActionSpec,
    ObserverControl,
    ProvisionerControl,
    QuadControl,
    QuadcopterState,
    ObserverState,
    ProvisionerState,
)
from .geometry import RngStream, Vec2, aabb_closest_point, aabb_point_distance, bearing, wrap_angle
from .mapgen import ObstacleSet, RoadGraph, ScenarioMap
from .scenarios import Challenge
from .sensing import AGENT, MESSAGE_AGE_MAX, TARGET, CommMessage, Detection, sense

APF_ATTRACT_GAIN = 1.0
APF_REPULSE_GAIN = 200.0
APF_REPULSE_CUTOFF = 30.0  # metres; farther obstacles exert nothing
APF_DISTANCE_FLOOR = 0.5  # metres; caps the 1/d blowup at contact
GOAL_EPSILON = 1e-6

PATROL_RADIUS = 350.0
PATROL_BAND = 50.0
STEER_GAIN = 3.0

BATTERY_LOW = 30.0
RECHARGE_ATTEND_RANGE = 15.0

QUAD_TYPE_CODE = 1
PROVISIONER_TYPE_CODE = 3

# Decorrelates the policy stream from the environment stream for a seed.
POLICY_SEED_SALT = 0xB5AD4ECEDA1CE2A9


def apf_force(pos: Vec2, goal: Vec2, obstacles: ObstacleSet) -> Vec2:
    """Unit attraction toward the goal plus short-range obstacle repulsion."""
    gx = goal.x - pos.x
    gy = goal.y - pos.y
    dist = math.hypot(gx, gy)
    if dist < GOAL_EPSILON:
        fx = fy = 0.0
    else:
        fx = APF_ATTRACT_GAIN * gx / dist
        fy = APF_ATTRACT_GAIN * gy / dist
    for box in obstacles:
        d = aabb_point_distance(box, pos)
        if d >= APF_REPULSE_CUTOFF:
            continue
        cp = aabb_closest_point(box, pos)
        ux = pos.x - cp.x
        uy = pos.y - cp.y
        norm = math.hypot(ux, uy)
        if norm == 0.0:
            continue  # sitting on the obstacle surface: direction undefined
        df = max(d, APF_DISTANCE_FLOOR)
        mag = APF_REPULSE_GAIN * (1.0 / df - 1.0 / APF_REPULSE_CUTOFF) / (df * df)
        fx += mag * ux / norm
        fy += mag * uy / norm
    return Vec2(fx, fy)


def quadcopter_heuristic(
    state: QuadcopterState,
    message: CommMessage | None,
    detections: list[Detection],
    scenario_map: ScenarioMap,
    challenge: Challenge,
) -> QuadControl:
    """Chase seen targets, else follow comms, else bring cargo home."""
    goal: Vec2 | None = None
    for d in detections:
        if d.kind == TARGET:
            goal = Vec2(state.pos.x + d.rel.x, state.pos.y + d.rel.y)
            break
    if goal is None and message is not None and message.age < MESSAGE_AGE_MAX:
        goal = message.target_pos
    if goal is None and challenge is Challenge.COMPLEX_FLEET and state.carrying:
        goal = scenario_map.base.center

    if state.battery < BATTERY_LOW and scenario_map.base is not None:
        candidates = [scenario_map.base.center]
        for d in detections:
            if d.kind == AGENT and d.meta == PROVISIONER_TYPE_CODE:
                candidates.append(Vec2(state.pos.x + d.rel.x, state.pos.y + d.rel.y))
        goal = min(candidates, key=lambda c: state.pos.distance_to(c))

    if goal is None:
        return QuadControl(Vec2(0.0, 0.0))
    force = apf_force(state.pos, goal, scenario_map.obstacles)
    mag = math.hypot(force.x, force.y)
    if mag > 1.0:
        force = Vec2(force.x / mag, force.y / mag)
    return QuadControl(force)


def observer_heuristic(state: ObserverState, scenario_map: ScenarioMap) -> ObserverControl:
    """Counter-clockwise patrol of a fixed circle around the arena centre."""
    arena = scenario_map.arena
    cx = (arena.min.x + arena.max.x) / 2.0
    cy = (arena.min.y + arena.max.y) / 2.0
    dx = state.pos.x - cx
    dy = state.pos.y - cy
    rho = math.hypot(dx, dy)
    if abs(rho - PATROL_RADIUS) <= PATROL_BAND:
        desired = wrap_angle(math.atan2(dy, dx) + math.pi / 2.0)
    elif rho < 1e-9:
        desired = 0.0  # dead centre: head for the circle point at bearing 0
    else:
        nearest = Vec2(cx + PATROL_RADIUS * dx / rho, cy + PATROL_RADIUS * dy / rho)
        desired = bearing(state.pos, nearest)
    steer = STEER_GAIN * wrap_angle(desired - state.heading)
    return ObserverControl(min(max(steer, -1.0), 1.0))


def provisioner_heuristic(
    state: ProvisionerState,
    detections: list[Detection],
    rng: RngStream,
    roads: RoadGraph,
) -> ProvisionerControl:
    """Roam the road network; halt beside quadcopters that need charge."""
    for d in detections:
        if d.kind == AGENT and d.meta == QUAD_TYPE_CODE:
            if (
                d.battery is not None
                and d.battery < BATTERY_LOW
                and math.hypot(d.rel.x, d.rel.y) <= RECHARGE_ATTEND_RANGE
            ):
                return ProvisionerControl(0.0, None)
    a, b, _ = roads.edges[state.edge]
    node_ahead = b if state.direction > 0 else a
    degree = len(roads.adjacency[node_ahead])
    return ProvisionerControl(1.0, rng.randrange(degree))


def random_policy(spec: ActionSpec, mode: str, rng: RngStream):
    """Uniform action in either mode."""
    if mode == "discrete":
        return rng.randrange(spec.discrete_cardinality)
    return [rng.uniform_range(lo, hi) for lo, hi in spec.continuous_bounds]


def _continuous_raw(ctrl) -> list[float]:
    if isinstance(ctrl, QuadControl):
        return [ctrl.v.x, ctrl.v.y]
    if isinstance(ctrl, ObserverControl):
        return [ctrl.steer]
    branch = ctrl.branch if ctrl.branch is not None else 0
    # the branch quantizer maps cell centres back to the same branch index
    return [2.0 * ctrl.throttle - 1.0, branch / 2.0 - 0.75]


class HeuristicPolicy:
    """Per-type rule dispatch; emits continuous raw actions."""

    name = "heuristic"

    def __init__(self, seed: int):
        self.rng = RngStream(seed ^ POLICY_SEED_SALT)

    def act(self, env, agent_id: str):
        idx = env.agent_index(agent_id)
        kind = env.agent_kinds[idx]
        sub = env.agent_sub_index(idx)
        if kind == QUADCOPTER:
            ctrl = quadcopter_heuristic(
                env.quads[sub],
                env.inboxes[sub],
                sense(env, agent_id),
                env.map,
                env.scenario.challenge,
            )
        elif kind == OBSERVER:
            ctrl = observer_heuristic(env.observers[sub], env.map)
        else:
            ctrl = provisioner_heuristic(
                env.provisioners[sub], sense(env, agent_id), self.rng, env.map.roads
            )
        return _continuous_raw(ctrl)


class RandomPolicy:
    """Uniform over the acting agent's own action space."""

    name = "random"

    def __init__(self, seed: int, mode: str = "discrete"):
        self.rng = RngStream(seed ^ POLICY_SEED_SALT)
        self.mode = mode
        self._spec_cache: dict[str, object] = {}

    def act(self, env, agent_id: str):
        spec = self._spec_cache.get(agent_id)
        if spec is None:
            spec = env.action_spec(agent_id)
            self._spec_cache[agent_id] = spec
        return random_policy(spec, self.mode, self.rng)


POLICIES = {"heuristic": HeuristicPolicy, "random": RandomPolicy}


def make_policy(name: str, seed: int, mode: str = "discrete"):
    if name == "random":
        return RandomPolicy(seed, mode)
    if name == "heuristic":
        return HeuristicPolicy(seed)
    raise ValueError(f"unknown policy {name!r}")
