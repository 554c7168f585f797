"""Discrete climate-scenario ladder: ordering, trigger probabilities, sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError

DEFAULT_NAMES = ("low", "int low", "int", "int high", "high", "extreme")
# Per-period probabilities consistent with the cumulative column
# (1.0, 0.7, 0.5, 0.3, 0.2, 0.1); "int" is 0.2.
DEFAULT_PROBS = (0.3, 0.2, 0.2, 0.1, 0.1, 0.1)

PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ScenarioId:
    index: int
    name: str
    ladder_names: tuple[str, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class ScenarioLadder:
    """Scenarios ordered from least (index 0) to most extreme (index K-1)."""

    names: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "probs", probs)
        if not names:
            raise DomainError("ladder needs at least one scenario")
        if len(names) != len(probs):
            raise DomainError(f"{len(names)} names but {len(probs)} probabilities")
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate scenario names in {names}")
        for n, p in zip(names, probs):
            if not (0.0 < p <= 1.0):
                raise DomainError(f"probability of {n!r} must be in (0, 1], got {p}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise DomainError(f"probabilities sum to {total!r}, expected 1")

    @classmethod
    def default(cls) -> "ScenarioLadder":
        return cls(DEFAULT_NAMES, DEFAULT_PROBS)

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "ScenarioLadder":
        """Build from ``[{"name": ..., "probability": ...}, ...]`` ordered by severity."""
        return cls(tuple(r["name"] for r in records), tuple(r["probability"] for r in records))

    def to_records(self) -> list[dict]:
        return [{"name": n, "probability": p} for n, p in zip(self.names, self.probs)]

    def __len__(self):
        return len(self.names)

    @property
    def scenarios(self) -> tuple[ScenarioId, ...]:
        return tuple(ScenarioId(i, n, self.names) for i, n in enumerate(self.names))

    @property
    def probs_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def cumulative_probs(self) -> np.ndarray:
        """Probability of landing at or above each scenario."""
        return np.array([math.fsum(self.probs[k:]) for k in range(len(self))])

    @property
    def severity_fractions(self) -> np.ndarray:
        k = len(self)
        if k == 1:
            return np.zeros(1)
        return np.arange(k) / (k - 1)

    def get(self, key: str | int | ScenarioId) -> ScenarioId:
        """Resolve a name, rank, or ScenarioId to this ladder's ScenarioId."""
        if isinstance(key, ScenarioId):
            if key.ladder_names and key.ladder_names != self.names:
                raise DomainError(f"scenario {key.name!r} belongs to a different ladder")
            if not (0 <= key.index < len(self)) or self.names[key.index] != key.name:
                raise DomainError(f"unknown scenario {key!r}")
            return ScenarioId(key.index, key.name, self.names)
        if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
            if not 0 <= key < len(self):
                raise DomainError(f"scenario rank {key} out of range 0..{len(self) - 1}")
            return ScenarioId(int(key), self.names[key], self.names)
        try:
            i = self.names.index(key)
        except ValueError:
            raise DomainError(f"unknown scenario {key!r}; ladder has {self.names}") from None
        return ScenarioId(i, key, self.names)

    def rank(self, key: str | int | ScenarioId) -> int:
        return self.get(key).index


def cumulative_trigger_prob(ladder: ScenarioLadder, s: str | int | ScenarioId) -> float:
    """Probability that the realized scenario is at or above ``s``."""
    k = ladder.rank(s)
    return math.fsum(ladder.probs[k:])


def severity_fraction(ladder: ScenarioLadder, s: str | int | ScenarioId) -> float:
    k = len(ladder)
    rank = ladder.rank(s)
    return 0.0 if k == 1 else rank / (k - 1)


def _cdf(ladder: ScenarioLadder) -> np.ndarray:
    cdf = np.cumsum(ladder.probs_array)
    cdf[-1] = 1.0
    return cdf


def sample_indices(ladder: ScenarioLadder, rng: np.random.Generator, size=None):
    """Draw scenario ranks by inverse-CDF on ``rng.random``.

    Scalar and batched calls consume the stream identically, so ``size=n``
    reproduces ``n`` successive scalar draws.
    """
    u = rng.random(size)
    idx = np.searchsorted(_cdf(ladder), u, side="right")
    return np.minimum(idx, len(ladder) - 1)


def sample_scenario(ladder: ScenarioLadder, rng: np.random.Generator) -> ScenarioId:
    return ladder.get(int(sample_indices(ladder, rng)))
