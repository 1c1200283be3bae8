"""The turn-based multi-agent environment: reset, step, rewards, lifecycle.

Agents act one at a time in the fixed order quad_0..quad_{q-1}, obs_*,
prov_*. Actions are buffered; when the last agent of a cycle acts the world
advances exactly one step and that call pays out the cycle's rewards. Every
source of randomness flows through one seeded stream, so an episode is a
pure function of (scenario id, seed, action sequence).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import agents as dyn
from .agents import (
    ACTION_SPECS,
    OBSERVER,
    PROVISIONER,
    QUADCOPTER,
    ActionSpec,
    BadActionError,
    ControlInput,
    ObserverState,
    ProvisionerState,
    QuadcopterState,
    decode_action,
    no_op_control,
    step_observer,
    step_provisioner,
    step_quadcopter,
)
from .geometry import RngStream, Vec2, in_sector, wrap_angle
from .mapgen import ScenarioMap, generate_map, spawn_target
from .scenarios import Challenge, ScenarioConfig, get_scenario
from .sensing import (
    FOV_BY_TYPE,
    MESSAGE_AGE_MAX,
    OBSERVATION_LENGTHS,
    TARGET as TARGET_KIND,
    UNIFIED_ACTION_BLOCK,
    CommMessage,
    Detection,
    build_global_state,
    build_observation,
    comm_transmit,
    sense,
)

REWARD_REACH = 10.0
REWARD_RETRIEVE = 25.0
PENALTY_COLLISION = -20.0
PENALTY_OUT_OF_BOUNDS = -20.0

REACH_RADIUS = 4.0
DEPOSIT_RADIUS = 8.0

TARGET_SPEED = 3.0  # m/s
TARGET_TURN_JITTER = 0.3  # rad, uniform +/- per step

FIELD = "field"
CARRIED = "carried"


class SteppedAfterEndError(RuntimeError):
    """step() was called on a truncated episode."""


# Shared info payload for buffering-phase steps (treat as read-only).
_ZERO_INFO = {
    "team_reward": 0.0,
    "reaches": 0,
    "retrieves": 0,
    "collision_steps": 0,
    "oob_steps": 0,
    "bad_action": False,
}


@dataclass(slots=True)
class TargetState:
    pos: Vec2
    heading: float
    phase: str = FIELD
    carrier: int | None = None  # quadcopter sub-index when carried


@dataclass(slots=True)
class StepOutcome:
    rewards: list[float]
    terminated: bool
    truncated: bool
    info: dict


def _target_violation(pos: Vec2, scenario_map: ScenarioMap):
    """None, "arena", or the first obstacle box containing pos."""
    arena = scenario_map.arena
    if pos.x < arena.min.x or pos.x > arena.max.x or pos.y < arena.min.y or pos.y > arena.max.y:
        return "arena"
    for box in scenario_map.obstacles.boxes:
        if box.min.x <= pos.x <= box.max.x and box.min.y <= pos.y <= box.max.y:
            return box
    return None


def target_step(target: TargetState, rng: RngStream, scenario_map: ScenarioMap) -> TargetState:
    """Random-walk one step, reflecting off arena walls and obstacle faces.

    The heading gets one uniform perturbation draw per step regardless of
    whether the move succeeds, keeping the draw sequence schedule fixed.
    """
    heading = wrap_angle(target.heading + rng.uniform_range(-TARGET_TURN_JITTER, TARGET_TURN_JITTER))
    step_len = TARGET_SPEED * dyn.DT
    pos = target.pos
    cand = Vec2(pos.x + step_len * math.cos(heading), pos.y + step_len * math.sin(heading))
    hit = _target_violation(cand, scenario_map)
    if hit is None:
        return TargetState(cand, heading, target.phase, target.carrier)

    if hit == "arena":
        arena = scenario_map.arena
        flip_x = cand.x < arena.min.x or cand.x > arena.max.x
        flip_y = cand.y < arena.min.y or cand.y > arena.max.y
    else:
        # pos is outside the box; whichever axis range pos violates is the
        # face the move crossed.
        flip_x = pos.x < hit.min.x or pos.x > hit.max.x
        flip_y = pos.y < hit.min.y or pos.y > hit.max.y
    if flip_x and flip_y:
        heading = wrap_angle(heading + math.pi)
    elif flip_x:
        heading = wrap_angle(math.pi - heading)
    elif flip_y:
        heading = wrap_angle(-heading)

    cand = Vec2(pos.x + step_len * math.cos(heading), pos.y + step_len * math.sin(heading))
    if _target_violation(cand, scenario_map) is None:
        return TargetState(cand, heading, target.phase, target.carrier)
    return TargetState(pos, heading, target.phase, target.carrier)


@dataclass(slots=True)
class WorldEvents:
    """Everything reward-relevant that happened in one world step."""

    reaches: int = 0
    retrieves: int = 0
    collided: list[int] = field(default_factory=list)  # agent indices
    out_of_bounds: list[int] = field(default_factory=list)  # agent indices


def compute_rewards(events: WorldEvents, n_agents: int) -> list[float]:
    """Shared reach/retrieve rewards for everyone plus individual penalties."""
    shared = REWARD_REACH * events.reaches + REWARD_RETRIEVE * events.retrieves
    rewards = [shared] * n_agents
    for i in events.collided:
        rewards[i] += PENALTY_COLLISION
    for i in events.out_of_bounds:
        rewards[i] += PENALTY_OUT_OF_BOUNDS
    return rewards


class Environment:
    """One scenario instance; single-threaded during an episode."""

    def __init__(self, scenario_id: str):
        self.scenario: ScenarioConfig = get_scenario(scenario_id)
        cfg = self.scenario
        self.agent_order: list[str] = (
            [f"quad_{i}" for i in range(cfg.n_quad)]
            + [f"obs_{i}" for i in range(cfg.n_obs)]
            + [f"prov_{i}" for i in range(cfg.n_prov)]
        )
        self.agent_kinds: list[str] = (
            [QUADCOPTER] * cfg.n_quad + [OBSERVER] * cfg.n_obs + [PROVISIONER] * cfg.n_prov
        )
        self._index_of = {aid: i for i, aid in enumerate(self.agent_order)}
        self._specs = [ACTION_SPECS[k] for k in self.agent_kinds]
        self.map: ScenarioMap | None = None
        self.rng: RngStream | None = None
        self.quads: list[QuadcopterState] = []
        self.observers: list[ObserverState] = []
        self.provisioners: list[ProvisionerState] = []
        self.targets: list[TargetState] = []
        self.inboxes: list[CommMessage | None] = []
        self._pending_messages: list[CommMessage] = []
        self._pending_controls: list[ControlInput | None] = []
        # (mode, value) per agent; None before the first action. Expanded to
        # unified one-hot/continuous blocks lazily by the global state.
        self.last_actions: list[tuple[str, object] | None] = []
        self.cursor = 0
        self.world_step = 0
        self.truncated = False
        self.cumulative_return = 0.0
        self.reach_count = 0
        self.retrieve_count = 0
        self.collision_steps = 0
        self.oob_steps = 0

    # ------------------------------------------------------------------
    # Introspection used by sensing, policies, the server, and the CLI.

    def agent_index(self, agent_id: str) -> int:
        return self._index_of[agent_id]

    def agent_sub_index(self, idx: int) -> int:
        cfg = self.scenario
        if idx < cfg.n_quad:
            return idx
        if idx < cfg.n_quad + cfg.n_obs:
            return idx - cfg.n_quad
        return idx - cfg.n_quad - cfg.n_obs

    def agent_pos(self, idx: int) -> Vec2:
        kind = self.agent_kinds[idx]
        sub = self.agent_sub_index(idx)
        if kind == QUADCOPTER:
            return self.quads[sub].pos
        if kind == OBSERVER:
            return self.observers[sub].pos
        return self.provisioners[sub].position(self.map.roads)

    def agent_heading(self, idx: int) -> float:
        if self.agent_kinds[idx] == OBSERVER:
            return self.observers[self.agent_sub_index(idx)].heading
        return 0.0

    def action_spec(self, agent_id: str) -> ActionSpec:
        return ACTION_SPECS[self.agent_kinds[self.agent_index(agent_id)]]

    @property
    def current_agent(self) -> str:
        return self.agent_order[self.cursor]

    def metadata(self) -> dict:
        """Per-agent type, observation length, and action space description."""
        agents = {}
        for aid, kind in zip(self.agent_order, self.agent_kinds):
            spec = ACTION_SPECS[kind]
            agents[aid] = {
                "type": kind,
                "obs_len": OBSERVATION_LENGTHS[kind],
                "discrete_n": spec.discrete_cardinality,
                "continuous_dims": spec.continuous_dims,
                "continuous_bounds": [list(b) for b in spec.continuous_bounds],
            }
        return {"scenario": self.scenario.id, "horizon": self.scenario.horizon, "agents": agents}

    # ------------------------------------------------------------------

    def reset(self, seed: int) -> tuple[str, np.ndarray]:
        """Regenerate the world for a fresh episode; returns the first turn."""
        cfg = self.scenario
        self.rng = RngStream(seed)
        self.map = generate_map(self.rng, cfg)
        arena = self.map.arena

        self.quads = []
        for _ in range(cfg.n_quad):
            if cfg.challenge is Challenge.SIMPLE_FLEET:
                x = self.rng.uniform_range(arena.min.x, arena.max.x)
                y = self.rng.uniform_range(arena.min.y, arena.max.y)
            else:
                fp = self.map.base.footprint()
                x = self.rng.uniform_range(fp.min.x, fp.max.x)
                y = self.rng.uniform_range(fp.min.y, fp.max.y)
            self.quads.append(
                QuadcopterState(Vec2(x, y), Vec2(0.0, 0.0), dyn.BATTERY_MAX, False, False)
            )

        self.observers = []
        for _ in range(cfg.n_obs):
            x = self.rng.uniform_range(arena.min.x, arena.max.x)
            y = self.rng.uniform_range(arena.min.y, arena.max.y)
            heading = wrap_angle(self.rng.uniform_range(-math.pi, math.pi))
            self.observers.append(ObserverState(Vec2(x, y), heading))

        self.provisioners = []
        if cfg.n_prov:
            roads = self.map.roads
            taken: set[int] = set()
            for _ in range(cfg.n_prov):
                node = self.rng.randrange(len(roads.nodes))
                while node in taken:
                    node = self.rng.randrange(len(roads.nodes))
                taken.add(node)
                edge = roads.adjacency[node][0]
                a, _b, _len = roads.edges[edge]
                if node == a:
                    progress, direction = 0.0, 1
                else:
                    progress, direction = 1.0, -1
                self.provisioners.append(
                    ProvisionerState(edge, progress, direction, False, None, 0)
                )

        self.targets = []
        for _ in range(cfg.target_count):
            pos = spawn_target(self.rng, self.map, self.map.flags)
            heading = wrap_angle(self.rng.uniform_range(-math.pi, math.pi))
            self.targets.append(TargetState(pos, heading))

        n = cfg.n_agents
        self.inboxes = [None] * cfg.n_quad
        self._pending_messages = []
        self._pending_controls = [None] * n
        self.last_actions = [None] * n
        self.cursor = 0
        self.world_step = 0
        self.truncated = False
        self.cumulative_return = 0.0
        self.reach_count = 0
        self.retrieve_count = 0
        self.collision_steps = 0
        self.oob_steps = 0
        first = self.agent_order[0]
        return first, self.observe(first)

    def observe(self, agent_id: str) -> np.ndarray:
        return build_observation(self, agent_id, sense(self, agent_id))

    def global_state(self) -> np.ndarray:
        return build_global_state(self)

    # ------------------------------------------------------------------

    def step(self, action, mode: str | None = None) -> StepOutcome:
        """Buffer the cursor agent's action; advance the world on cycle end."""
        if self.truncated:
            raise SteppedAfterEndError("episode is over; reset before stepping")
        if mode is None:
            mode = "discrete" if isinstance(action, (int, np.integer)) else "continuous"

        idx = self.cursor
        spec = self._specs[idx]
        bad_action = False
        try:
            ctrl = decode_action(spec, mode, action)
        except BadActionError:
            ctrl = no_op_control(spec.agent_type)
            bad_action = True
        self._pending_controls[idx] = ctrl
        if bad_action:
            self.last_actions[idx] = None
        elif mode == "discrete":
            self.last_actions[idx] = ("discrete", int(action))
        else:
            self.last_actions[idx] = (
                "continuous",
                tuple(float(action[d]) for d in range(spec.continuous_dims)),
            )

        n = len(self.agent_order)
        if idx + 1 < n:
            self.cursor = idx + 1
            return StepOutcome(
                rewards=[0.0] * n,
                terminated=False,
                truncated=False,
                info=_ZERO_INFO if not bad_action else dict(_ZERO_INFO, bad_action=True),
            )

        events = self._advance_world()
        self.cursor = 0
        rewards = compute_rewards(events, n)
        n_coll = len(events.collided)
        n_oob = len(events.out_of_bounds)
        team_reward = (
            REWARD_REACH * events.reaches
            + REWARD_RETRIEVE * events.retrieves
            + PENALTY_COLLISION * n_coll
            + PENALTY_OUT_OF_BOUNDS * n_oob
        )
        self.cumulative_return += team_reward
        self.reach_count += events.reaches
        self.retrieve_count += events.retrieves
        self.collision_steps += n_coll
        self.oob_steps += n_oob
        self.world_step += 1
        self.truncated = self.world_step >= self.scenario.horizon
        return StepOutcome(
            rewards=rewards,
            terminated=False,
            truncated=self.truncated,
            info={
                "team_reward": team_reward,
                "reaches": events.reaches,
                "retrieves": events.retrieves,
                "collision_steps": n_coll,
                "oob_steps": n_oob,
                "bad_action": bad_action,
            },
        )

    # ------------------------------------------------------------------

    def _advance_world(self) -> WorldEvents:
        cfg = self.scenario
        challenge = cfg.challenge
        scenario_map = self.map
        roads = scenario_map.roads
        events = WorldEvents()

        # Recharge zones are sampled before anyone moves: provisioners that
        # finished the previous step stopped.
        recharge_points: tuple[Vec2, ...] = ()
        if self.provisioners:
            recharge_points = tuple(
                p.position(roads) for p in self.provisioners if not p.moving
            )

        nq = cfg.n_quad
        no = cfg.n_obs
        for i in range(nq):
            ctrl = self._pending_controls[i]
            new_state, collided = step_quadcopter(
                self.quads[i], ctrl, scenario_map, challenge, recharge_points
            )
            self.quads[i] = new_state
            if collided:
                events.collided.append(i)
        for i in range(no):
            ctrl = self._pending_controls[nq + i]
            new_state, oob = step_observer(self.observers[i], ctrl, scenario_map.arena)
            self.observers[i] = new_state
            if oob:
                events.out_of_bounds.append(nq + i)
        for i in range(cfg.n_prov):
            ctrl = self._pending_controls[nq + no + i]
            self.provisioners[i] = step_provisioner(self.provisioners[i], ctrl, roads)

        for ti, t in enumerate(self.targets):
            if t.phase == FIELD:
                self.targets[ti] = target_step(t, self.rng, scenario_map)
            else:
                t.pos = self.quads[t.carrier].pos

        self._resolve_interactions(events)
        self._message_phase()
        self._pending_controls = [None] * cfg.n_agents
        return events

    def _respawn_target(self, slot: int) -> None:
        pos = spawn_target(self.rng, self.map, self.map.flags)
        heading = wrap_angle(self.rng.uniform_range(-math.pi, math.pi))
        self.targets[slot] = TargetState(pos, heading)

    def _resolve_interactions(self, events: WorldEvents) -> None:
        challenge = self.scenario.challenge
        complex_tier = challenge is Challenge.COMPLEX_FLEET
        reach2 = REACH_RADIUS * REACH_RADIUS

        # Reach: quadcopters only, nearest-phase order is target slot major.
        for ti, t in enumerate(self.targets):
            if t.phase != FIELD:
                continue
            for qi, q in enumerate(self.quads):
                if q.disabled or (complex_tier and q.carrying):
                    continue
                dx = q.pos.x - t.pos.x
                dy = q.pos.y - t.pos.y
                if dx * dx + dy * dy <= reach2:
                    events.reaches += 1
                    if complex_tier:
                        t.phase = CARRIED
                        t.carrier = qi
                        t.pos = q.pos
                        q.carrying = True
                    else:
                        self._respawn_target(ti)
                    break

        if not complex_tier:
            return

        base = self.map.base
        roads = self.map.roads
        prov_positions = [p.position(roads) for p in self.provisioners]
        deposit2 = DEPOSIT_RADIUS * DEPOSIT_RADIUS

        # Deposit: a carrier inside the base or beside any provisioner drops
        # its target; the retrieve reward is paid here.
        for qi, q in enumerate(self.quads):
            if not q.carrying:
                continue
            receiver: int | None = None
            at_base = base.contains(q.pos)
            if not at_base:
                for pi, pp in enumerate(prov_positions):
                    dx = pp.x - q.pos.x
                    dy = pp.y - q.pos.y
                    if dx * dx + dy * dy <= deposit2:
                        receiver = pi
                        break
                if receiver is None:
                    continue
            events.retrieves += 1
            if receiver is not None:
                self.provisioners[receiver].retrieved_count += 1
            for ti, t in enumerate(self.targets):
                if t.phase == CARRIED and t.carrier == qi:
                    self._respawn_target(ti)
                    break
            q.carrying = False

        # Direct retrieve: a provisioner adjacent to a free target takes it,
        # collapsing reach + retrieve into one step.
        for pi, pp in enumerate(prov_positions):
            for ti, t in enumerate(self.targets):
                if t.phase != FIELD:
                    continue
                dx = pp.x - t.pos.x
                dy = pp.y - t.pos.y
                if dx * dx + dy * dy <= deposit2:
                    events.reaches += 1
                    events.retrieves += 1
                    self.provisioners[pi].retrieved_count += 1
                    self._respawn_target(ti)

    def _message_phase(self) -> None:
        for msg in self.inboxes:
            if msg is not None and msg.age < MESSAGE_AGE_MAX:
                msg.age += 1
        if self._pending_messages:
            # Broadcast; delivery is one world step after emission, so the
            # newest message arrives already aged 1.
            latest = self._pending_messages[-1]
            delivered_age = min(latest.age + 1, MESSAGE_AGE_MAX)
            for i in range(len(self.inboxes)):
                self.inboxes[i] = CommMessage(latest.target_pos, delivered_age)
            self._pending_messages = []

        challenge = self.scenario.challenge
        scenario_map = self.map
        fov = FOV_BY_TYPE[OBSERVER]
        for obs_state in self.observers:
            detections = [
                Detection(TARGET_KIND, t.pos - obs_state.pos)
                for t in self.targets
                if t.phase == FIELD
                and in_sector(obs_state.pos, obs_state.heading, fov, t.pos)
            ]
            self._pending_messages.extend(
                comm_transmit(obs_state, detections, scenario_map, challenge)
            )
