"""HeMAC: a deterministic 2D benchmark for heterogeneous multi-agent teams."""

from .agents import ACTION_SPECS, ActionSpec, BadActionError, decode_action
from .env import Environment, StepOutcome, SteppedAfterEndError
from .geometry import RngStream, Vec2, rng_seed
from .scenarios import (
    Challenge,
    ScenarioConfig,
    UnknownScenarioError,
    get_scenario,
    scenario_registry,
)

__version__ = "0.1.0"
ENGINE = f"hemac {__version__}"

__all__ = [
    "ACTION_SPECS",
    "ActionSpec",
    "BadActionError",
    "Challenge",
    "ENGINE",
    "Environment",
    "RngStream",
    "ScenarioConfig",
    "StepOutcome",
    "SteppedAfterEndError",
    "UnknownScenarioError",
    "Vec2",
    "decode_action",
    "get_scenario",
    "rng_seed",
    "scenario_registry",
    "__version__",
]
