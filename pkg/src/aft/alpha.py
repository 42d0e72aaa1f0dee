"""Count-and-threshold (alpha-count) fault discrimination.

Each monitored channel keeps a score that grows by one on every error
signal and is multiplied by a decay factor on every quiet observation.
The first time the score crosses the threshold the channel latches as
``permanent_or_intermittent`` and stays latched until :func:`reset`.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple


class Classification(Enum):
    BENIGN = "benign"
    PERMANENT_OR_INTERMITTENT = "permanent_or_intermittent"


@dataclass(frozen=True)
class AlphaConfig:
    decay: float = 0.5
    threshold: float = 3.0
    strict: bool = True

    def __post_init__(self):
        if not 0.0 <= self.decay <= 1.0:
            raise ValueError(f"decay must lie in [0, 1], got {self.decay}")
        if not self.threshold > 0.0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")

    def crossed(self, alpha: float) -> bool:
        return alpha > self.threshold if self.strict else alpha >= self.threshold


class AlphaCountState(NamedTuple):
    alpha: float = 0.0
    latched: bool = False

    @property
    def classification(self) -> Classification:
        if self.latched:
            return Classification.PERMANENT_OR_INTERMITTENT
        return Classification.BENIGN


def step(state: AlphaCountState, config: AlphaConfig, error_observed: bool) -> AlphaCountState:
    alpha = state.alpha + 1.0 if error_observed else state.alpha * config.decay
    return AlphaCountState(alpha, state.latched or config.crossed(alpha))


def run(errors: Iterable[bool], config: AlphaConfig, state: AlphaCountState = AlphaCountState()):
    """Fold :func:`step` over an error sequence, yielding each successive state."""
    for error in errors:
        state = step(state, config, error)
        yield state


def reset(state: AlphaCountState) -> AlphaCountState:
    return state._replace(alpha=0.0, latched=False)
