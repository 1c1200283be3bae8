"""Agent archetypes: action decoding, kinematics, and resource models.

Three platform types share the world but move nothing alike: quadcopters fly
holonomically and collide with buildings, observers fly fast fixed-wing
arcs above everything, provisioners are ground vehicles pinned to the road
graph. All transitions are deterministic; stochasticity lives in map
generation and target motion only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geometry import Aabb, Vec2, bearing, wrap_angle
from .mapgen import RoadGraph, ScenarioMap
from .scenarios import Challenge

DT = 0.1  # seconds of world time per world step

QUAD_V_MAX = 10.0  # m/s
QUAD_BODY_RADIUS = 1.5  # m
BATTERY_MAX = 100.0
BATTERY_DRAIN_REST = 0.02  # per step
BATTERY_DRAIN_MOVE = 0.03  # per step at full speed
BATTERY_RECHARGE = 2.0  # per step in a recharge zone
PROVISIONER_RECHARGE_RADIUS = 10.0  # m around a stopped provisioner

OBSERVER_SPEED = 25.0  # m/s, constant
OBSERVER_TURN_MAX = 0.15  # rad per step
OUT_OF_BOUNDS_MARGIN = 50.0  # m beyond the arena before penalties

PROVISIONER_SPEED = 8.0  # m/s at full throttle

QUADCOPTER = "quadcopter"
OBSERVER = "observer"
PROVISIONER = "provisioner"

_SQ2 = math.sqrt(0.5)
# Index 0 is the hover no-op; 1..8 step through the compass clockwise from N.
QUAD_COMPASS = (
    (0.0, 0.0),
    (0.0, 1.0),
    (_SQ2, _SQ2),
    (1.0, 0.0),
    (_SQ2, -_SQ2),
    (0.0, -1.0),
    (-_SQ2, -_SQ2),
    (-1.0, 0.0),
    (-_SQ2, _SQ2),
)
OBSERVER_STEERS = (-1.0, 0.0, 1.0)


class BadActionError(ValueError):
    """Out-of-range discrete action; callers treat it as a no-op and flag it."""


@dataclass(frozen=True)
class ActionSpec:
    agent_type: str
    discrete_cardinality: int
    continuous_dims: int
    continuous_bounds: tuple[tuple[float, float], ...]


_UNIT = (-1.0, 1.0)
ACTION_SPECS = {
    QUADCOPTER: ActionSpec(QUADCOPTER, 9, 2, (_UNIT, _UNIT)),
    OBSERVER: ActionSpec(OBSERVER, 3, 1, (_UNIT,)),
    PROVISIONER: ActionSpec(PROVISIONER, 6, 2, (_UNIT, _UNIT)),
}


@dataclass(slots=True)
class QuadControl:
    v: Vec2  # commanded velocity, unit-disc fraction of QUAD_V_MAX


@dataclass(slots=True)
class ObserverControl:
    steer: float  # in [-1, 1]


@dataclass(slots=True)
class ProvisionerControl:
    throttle: float  # in [0, 1]
    branch: int | None  # desired outgoing edge at the next junction


ControlInput = QuadControl | ObserverControl | ProvisionerControl


def no_op_control(agent_type: str) -> ControlInput:
    if agent_type == QUADCOPTER:
        return QuadControl(Vec2(0.0, 0.0))
    if agent_type == OBSERVER:
        return ObserverControl(0.0)
    return ProvisionerControl(0.0, None)


@dataclass(slots=True)
class QuadcopterState:
    pos: Vec2
    vel: Vec2
    battery: float
    carrying: bool
    disabled: bool


@dataclass(slots=True)
class ObserverState:
    pos: Vec2
    heading: float  # (-pi, pi]


@dataclass(slots=True)
class ProvisionerState:
    edge: int  # index into RoadGraph.edges
    progress: float  # [0, 1] along the edge, oriented a -> b
    direction: int  # +1 travels a -> b, -1 travels b -> a
    moving: bool
    pending_branch: int | None
    retrieved_count: int

    def position(self, roads: RoadGraph) -> Vec2:
        a, b, _ = roads.edges[self.edge]
        pa = roads.nodes[a]
        pb = roads.nodes[b]
        t = self.progress
        return Vec2(pa.x + (pb.x - pa.x) * t, pa.y + (pb.y - pa.y) * t)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


# Decoded discrete controls are stateless; share one instance per index.
_DISCRETE_TABLES: dict[str, tuple[ControlInput, ...]] = {
    QUADCOPTER: tuple(QuadControl(Vec2(vx, vy)) for vx, vy in QUAD_COMPASS),
    OBSERVER: tuple(ObserverControl(s) for s in OBSERVER_STEERS),
    PROVISIONER: (
        ProvisionerControl(0.0, None),
        ProvisionerControl(1.0, None),
        ProvisionerControl(1.0, 0),
        ProvisionerControl(1.0, 1),
        ProvisionerControl(1.0, 2),
        ProvisionerControl(1.0, 3),
    ),
}


def decode_action(spec: ActionSpec, mode: str, raw) -> ControlInput:
    """Turn a raw learner action into a typed control.

    mode is "discrete" (integer index) or "continuous" (vector within the
    spec bounds; values are clamped, never rejected). Discrete indices
    outside the cardinality raise BadActionError.
    """
    if mode == "discrete":
        idx = int(raw)
        if idx < 0 or idx >= spec.discrete_cardinality:
            raise BadActionError(f"{spec.agent_type} discrete action {idx} out of range")
        return _DISCRETE_TABLES[spec.agent_type][idx]

    if spec.agent_type == QUADCOPTER:
        vx = _clamp(float(raw[0]), -1.0, 1.0)
        vy = _clamp(float(raw[1]), -1.0, 1.0)
        mag = math.hypot(vx, vy)
        if mag > 1.0:
            vx /= mag
            vy /= mag
        return QuadControl(Vec2(vx, vy))
    if spec.agent_type == OBSERVER:
        value = raw[0] if hasattr(raw, "__getitem__") else raw
        return ObserverControl(_clamp(float(value), -1.0, 1.0))
    throttle = (_clamp(float(raw[0]), -1.0, 1.0) + 1.0) / 2.0
    branch = int(math.floor((_clamp(float(raw[1]), -1.0, 1.0) + 1.0) / 2.0 * 4.0))
    return ProvisionerControl(throttle, min(max(branch, 0), 3))


def encode_discrete(control: ControlInput) -> int:
    """Inverse of discrete decode_action; only exact table entries map back."""
    if isinstance(control, QuadControl):
        for idx, (vx, vy) in enumerate(QUAD_COMPASS):
            if control.v.x == vx and control.v.y == vy:
                return idx
        raise ValueError("quadcopter control is not a discrete compass action")
    if isinstance(control, ObserverControl):
        return OBSERVER_STEERS.index(control.steer)
    if control.throttle == 0.0:
        return 0
    if control.branch is None:
        return 1
    return 2 + control.branch


def step_quadcopter(
    state: QuadcopterState,
    ctrl: QuadControl,
    scenario_map: ScenarioMap,
    challenge: Challenge,
    recharge_points: tuple[Vec2, ...] = (),
) -> tuple[QuadcopterState, bool]:
    """Advance one step; returns (new state, collided-this-step).

    Movement is clipped to obstacle contact by bisection; battery applies in
    Fleet and Complex Fleet only, with recharge inside the base footprint or
    near a stopped provisioner (recharge_points). A disabled quadcopter is
    inert: no motion, no drain, no events.
    """
    if state.disabled:
        return state, False

    arena = scenario_map.arena
    px = state.pos.x
    py = state.pos.y
    fx = ctrl.v.x
    fy = ctrl.v.y
    speed_frac = math.hypot(fx, fy)
    vx = fx * QUAD_V_MAX
    vy = fy * QUAD_V_MAX
    cx = px + vx * DT
    cy = py + vy * DT
    if cx < arena.min.x:
        cx = arena.min.x
    elif cx > arena.max.x:
        cx = arena.max.x
    if cy < arena.min.y:
        cy = arena.min.y
    elif cy > arena.max.y:
        cy = arena.max.y

    collided = False
    boxes = scenario_map.obstacles.boxes
    if boxes and _disc_hits_any(cx, cy, boxes):
        # Current position is contact-free by invariant; bisect toward the
        # candidate to stop just short of the surface.
        lo = 0.0
        hi = 1.0
        dx = cx - px
        dy = cy - py
        for _ in range(10):
            mid = (lo + hi) / 2.0
            if _disc_hits_any(px + dx * mid, py + dy * mid, boxes):
                hi = mid
            else:
                lo = mid
        cx = px + dx * lo
        cy = py + dy * lo
        vx = 0.0
        vy = 0.0
        collided = True

    battery = state.battery
    disabled = state.disabled
    if challenge is not Challenge.SIMPLE_FLEET:
        battery -= BATTERY_DRAIN_REST + BATTERY_DRAIN_MOVE * min(speed_frac, 1.0)
        base = scenario_map.base
        recharging = base is not None and (
            abs(cx - base.center.x) <= base.half_extent
            and abs(cy - base.center.y) <= base.half_extent
        )
        if not recharging:
            for rp in recharge_points:
                ddx = rp.x - cx
                ddy = rp.y - cy
                if ddx * ddx + ddy * ddy <= PROVISIONER_RECHARGE_RADIUS**2:
                    recharging = True
                    break
        if recharging:
            battery += BATTERY_RECHARGE
            if battery > BATTERY_MAX:
                battery = BATTERY_MAX
        if battery <= 0.0:
            battery = 0.0
            disabled = True
            vx = 0.0
            vy = 0.0

    return (
        QuadcopterState(
            pos=Vec2(cx, cy),
            vel=Vec2(vx, vy),
            battery=battery,
            carrying=state.carrying,
            disabled=disabled,
        ),
        collided,
    )


def _disc_hits_any(x: float, y: float, boxes) -> bool:
    r2 = QUAD_BODY_RADIUS * QUAD_BODY_RADIUS
    for box in boxes:
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
        if dx * dx + dy * dy <= r2:
            return True
    return False


def step_observer(
    state: ObserverState, ctrl: ObserverControl, arena: Aabb
) -> tuple[ObserverState, bool]:
    """Advance one step; returns (new state, out-of-bounds-this-step).

    Fixed-wing model: constant speed, bounded turn rate, obstacles ignored.
    The position is never clamped; straying past the dilated arena raises an
    out-of-bounds event every step it persists.
    """
    heading = wrap_angle(state.heading + ctrl.steer * OBSERVER_TURN_MAX)
    step_len = OBSERVER_SPEED * DT
    pos = Vec2(
        state.pos.x + step_len * math.cos(heading),
        state.pos.y + step_len * math.sin(heading),
    )
    oob = (
        pos.x < arena.min.x - OUT_OF_BOUNDS_MARGIN
        or pos.x > arena.max.x + OUT_OF_BOUNDS_MARGIN
        or pos.y < arena.min.y - OUT_OF_BOUNDS_MARGIN
        or pos.y > arena.max.y + OUT_OF_BOUNDS_MARGIN
    )
    return ObserverState(pos=pos, heading=heading), oob


def step_provisioner(
    state: ProvisionerState, ctrl: ProvisionerControl, roads: RoadGraph
) -> ProvisionerState:
    """Advance along the road graph, carrying leftover travel across nodes.

    At a node the pending branch (if any) picks from the bearing-sorted
    outgoing edges modulo degree; otherwise the vehicle continues onto the
    edge whose bearing best matches its arrival bearing.
    """
    if ctrl.throttle <= 0.0:
        if not state.moving:
            return state
        return replace(state, moving=False)

    pending = ctrl.branch if ctrl.branch is not None else state.pending_branch
    edge = state.edge
    progress = state.progress
    direction = state.direction
    travel = PROVISIONER_SPEED * DT * ctrl.throttle

    for _ in range(8):  # step length is far below edge lengths; 1 pass typical
        a, b, length = roads.edges[edge]
        to_node = (1.0 - progress) * length if direction > 0 else progress * length
        if travel < to_node:
            progress += direction * travel / length
            break
        travel -= to_node
        node = b if direction > 0 else a
        arrival = roads.outgoing_bearing(edge, roads.edge_other(edge, node))
        adjacency = roads.adjacency[node]
        if pending is not None:
            edge = adjacency[pending % len(adjacency)]
            pending = None
        else:
            edge = min(
                adjacency,
                key=lambda e: (abs(wrap_angle(roads.outgoing_bearing(e, node) - arrival)), e),
            )
        na, nb, _ = roads.edges[edge]
        if node == na:
            direction = 1
            progress = 0.0
        else:
            direction = -1
            progress = 1.0
        if travel == 0.0:
            break

    return ProvisionerState(
        edge=edge,
        progress=_clamp(progress, 0.0, 1.0),
        direction=direction,
        moving=True,
        pending_branch=pending,
        retrieved_count=state.retrieved_count,
    )
