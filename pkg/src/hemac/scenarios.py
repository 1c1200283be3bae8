"""Challenge tiers and the fixed scenario registry.

Scenario ids encode the team composition: ``5q2o1p`` means five quadcopters,
two observers, one provisioner. The registry is closed; external code looks
scenarios up by id and never constructs ad-hoc configs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Challenge(Enum):
    SIMPLE_FLEET = "simple_fleet"
    FLEET = "fleet"
    COMPLEX_FLEET = "complex_fleet"


class UnknownScenarioError(KeyError):
    """Raised when a scenario id is not in the registry."""


HORIZONS = {
    Challenge.SIMPLE_FLEET: 2000,
    Challenge.FLEET: 3000,
    Challenge.COMPLEX_FLEET: 4000,
}


@dataclass(frozen=True)
class ScenarioConfig:
    id: str
    challenge: Challenge
    n_quad: int
    n_obs: int
    n_prov: int
    horizon: int
    target_count: int

    @property
    def n_agents(self) -> int:
        return self.n_quad + self.n_obs + self.n_prov


def _make(challenge: Challenge, q: int, o: int, p: int) -> ScenarioConfig:
    code = f"{q}q{o}o" + (f"{p}p" if challenge is Challenge.COMPLEX_FLEET else "")
    # Simple Fleet chases a single roaming target; the other tiers field one
    # target per quadcopter.
    targets = 1 if challenge is Challenge.SIMPLE_FLEET else q
    return ScenarioConfig(
        id=f"{challenge.value}_{code}",
        challenge=challenge,
        n_quad=q,
        n_obs=o,
        n_prov=p,
        horizon=HORIZONS[challenge],
        target_count=targets,
    )


_SCENARIOS = [
    _make(Challenge.SIMPLE_FLEET, 1, 1, 0),
    _make(Challenge.SIMPLE_FLEET, 3, 1, 0),
    _make(Challenge.SIMPLE_FLEET, 5, 2, 0),
    _make(Challenge.FLEET, 3, 1, 0),
    _make(Challenge.FLEET, 10, 3, 0),
    _make(Challenge.FLEET, 20, 5, 0),
    _make(Challenge.COMPLEX_FLEET, 3, 1, 1),
    _make(Challenge.COMPLEX_FLEET, 5, 2, 1),
    _make(Challenge.COMPLEX_FLEET, 5, 1, 2),
    _make(Challenge.COMPLEX_FLEET, 10, 2, 2),
    _make(Challenge.COMPLEX_FLEET, 20, 3, 5),
]

SCENARIOS = {cfg.id: cfg for cfg in _SCENARIOS}


def scenario_registry() -> list[ScenarioConfig]:
    """All eleven scenarios, in tier order."""
    return list(_SCENARIOS)


def get_scenario(scenario_id: str) -> ScenarioConfig:
    try:
        return SCENARIOS[scenario_id]
    except KeyError:
        raise UnknownScenarioError(scenario_id) from None
