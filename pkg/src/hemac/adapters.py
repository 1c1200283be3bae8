"""Homogenization layer: zero-padded observations and unified action spaces.

Classical homogeneous-agent algorithms want every agent to share one
observation shape and one action space. This layer pads observations with
zeros and widens action spaces to the largest cardinality/dimension present,
with per-agent masks marking which unified actions are native. Driving the
environment through this layer with mask-respecting actions is bit-identical
to driving it natively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .agents import ActionSpec


@dataclass(frozen=True)
class UnifiedSpaces:
    obs_dim: int
    discrete_cardinality: int
    continuous_dims: int
    # agent_type -> tuple of booleans over unified discrete indices
    masks: dict[str, tuple[bool, ...]]


def unify_discrete(specs: list[ActionSpec]) -> UnifiedSpaces:
    """Widest-of-each-dimension unified space over the given specs."""
    from .sensing import OBSERVATION_LENGTHS

    if not specs:
        raise ValueError("need at least one action spec")
    cardinality = max(s.discrete_cardinality for s in specs)
    cont = max(s.continuous_dims for s in specs)
    obs_dim = max(OBSERVATION_LENGTHS[s.agent_type] for s in specs)
    masks = {
        s.agent_type: tuple(i < s.discrete_cardinality for i in range(cardinality))
        for s in specs
    }
    return UnifiedSpaces(obs_dim, cardinality, cont, masks)


def pad_observation(obs: np.ndarray, unified: UnifiedSpaces) -> np.ndarray:
    """Copy the native vector and zero-fill the tail up to obs_dim."""
    out = np.zeros(unified.obs_dim)
    out[: len(obs)] = obs
    return out


def unified_to_native(spec: ActionSpec, mode: str, raw):
    """Map a unified-space action onto the agent's native space.

    Masked-invalid discrete picks degrade to the agent's discrete action 0
    (never an error: homogenized learners emit them routinely). Continuous
    vectors are truncated to the native dimension count.
    """
    if mode == "discrete":
        idx = int(raw)
        if idx >= spec.discrete_cardinality:
            return 0
        return idx
    return [float(raw[d]) for d in range(spec.continuous_dims)]


def embed_discrete_in_continuous(spec: ActionSpec, raw) -> int:
    """Argmax readout of a score vector; ties break to the lowest index."""
    best = 0
    best_v = float(raw[0])
    for i in range(1, spec.discrete_cardinality):
        v = float(raw[i])
        if v > best_v:
            best = i
            best_v = v
    return best


class PaddedEnv:
    """Thin homogenizing wrapper over an Environment.

    Observations come back zero-padded to the unified length; actions are
    interpreted in the unified space and narrowed before reaching the
    simulation, so dynamics are exactly those of the wrapped environment.
    """

    def __init__(self, env):
        from .agents import ACTION_SPECS

        self.env = env
        present = sorted({k for k in env.agent_kinds})
        self.unified = unify_discrete([ACTION_SPECS[k] for k in present])

    def action_spec(self, agent_id: str) -> ActionSpec:
        """The unified space, tagged with the agent's own type."""
        native = self.env.action_spec(agent_id)
        u = self.unified
        return ActionSpec(
            native.agent_type,
            u.discrete_cardinality,
            u.continuous_dims,
            ((-1.0, 1.0),) * u.continuous_dims,
        )

    def reset(self, seed: int):
        agent, obs = self.env.reset(seed)
        return agent, pad_observation(obs, self.unified)

    def observe(self, agent_id: str) -> np.ndarray:
        return pad_observation(self.env.observe(agent_id), self.unified)

    def step(self, action, mode: str | None = None):
        if mode is None:
            mode = "discrete" if isinstance(action, (int, np.integer)) else "continuous"
        spec = self.env.action_spec(self.env.current_agent)
        return self.env.step(unified_to_native(spec, mode, action), mode)

    def __getattr__(self, name):
        return getattr(self.env, name)
