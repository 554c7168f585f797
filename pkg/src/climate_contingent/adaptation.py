"""Adapter's return on adaptation capital.

Capital raised from selling contracts is earmarked for the contract's trigger
scenario. When a different scenario is realized, the capital is devalued by a
flat upper (over-prepared) or lower (under-prepared) discount. Capital from
earlier periods can keep earning, scaled by a logistic decay in its age.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .scenarios import ScenarioId

DEFAULT_RETURNS = (0.0, 1.5, 2.25, 3.75, 5.5, 7.0)


@dataclass(frozen=True)
class AdaptationReturnTable:
    """Return multiple per unit of effective capital, indexed by scenario rank."""

    returns: tuple[float, ...] = DEFAULT_RETURNS

    def __post_init__(self):
        r = tuple(float(x) for x in self.returns)
        object.__setattr__(self, "returns", r)
        if any(x < 0 for x in r):
            raise DomainError(f"adaptation returns must be >= 0, got {r}")
        if any(b < a for a, b in zip(r, r[1:])):
            raise DomainError(f"adaptation returns must be nondecreasing in severity, got {r}")

    def __getitem__(self, s: ScenarioId | int) -> float:
        return self.returns[s.index if isinstance(s, ScenarioId) else s]

    def __len__(self):
        return len(self.returns)


@dataclass(frozen=True)
class MismatchDiscounts:
    upper: float = 0.5
    lower: float = 0.75

    def __post_init__(self):
        for name in ("upper", "lower"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} discount must be in [0, 1], got {v}")


@dataclass(frozen=True)
class DecayCurve:
    """Logistic value-retention factor ``1 / (1 + exp(steepness * (age - midpoint)))``."""

    midpoint_years: float = 20.0
    steepness: float = 0.15
    horizon_years: float = 40.0

    def __post_init__(self):
        if self.steepness <= 0:
            raise DomainError(f"steepness must be > 0, got {self.steepness}")
        if self(0.0) < 0.95 or self(self.horizon_years) > 0.05:
            raise DomainError(
                "decay curve must start >= 0.95 and fall <= 0.05 by the horizon; "
                f"got f(0)={self(0.0):.4f}, f({self.horizon_years})={self(self.horizon_years):.4f}"
            )

    def __call__(self, age_years: float) -> float:
        z = self.steepness * (age_years - self.midpoint_years)
        # exp overflow guard for very old capital
        if z > 700:
            return 0.0
        return 1.0 / (1.0 + math.exp(z))


@dataclass(frozen=True)
class VintageEntry:
    raised_period: int
    earmark: ScenarioId
    amount: float


@dataclass
class VintageLedger:
    """Earmarked adaptation capital, one entry per (period, scenario) raise."""

    entries: list[VintageEntry] = field(default_factory=list)

    def add(self, raised_period: int, earmark: ScenarioId, amount: float) -> None:
        if amount < 0:
            raise DomainError(f"ledger amounts must be >= 0, got {amount}")
        self.entries.append(VintageEntry(raised_period, earmark, amount))

    def total(self) -> float:
        return math.fsum(e.amount for e in self.entries)


def mismatch_factor(
    earmark: ScenarioId,
    realized: ScenarioId,
    d: MismatchDiscounts,
    discounts_on: bool = True,
) -> float:
    if not discounts_on or realized.index == earmark.index:
        return 1.0
    if realized.index < earmark.index:
        return d.upper
    return d.lower


def historical_factor(age_years: float, curve: DecayCurve, historical_on: bool = True) -> float:
    if age_years < 0:
        raise DomainError(f"age must be >= 0, got {age_years}")
    if not historical_on:
        return 1.0 if age_years == 0 else 0.0
    return curve(age_years)


def adaptation_income(
    ledger: VintageLedger,
    realized: ScenarioId,
    table: AdaptationReturnTable,
    d: MismatchDiscounts,
    curve: DecayCurve,
    current_period: int,
    period_years: float,
    discounts_on: bool = True,
    historical_on: bool = True,
) -> float:
    """Adaptation return earned in ``current_period`` by every vintage in the ledger."""
    rate = table[realized]
    if rate == 0.0:
        return 0.0
    parts = []
    for e in ledger.entries:
        if e.raised_period > current_period:
            raise DomainError(
                f"ledger entry raised in period {e.raised_period} is after period {current_period}"
            )
        age = (current_period - e.raised_period) * period_years
        parts.append(
            e.amount
            * mismatch_factor(e.earmark, realized, d, discounts_on)
            * historical_factor(age, curve, historical_on)
            * rate
        )
    return math.fsum(parts)


def mismatch_matrix(k: int, d: MismatchDiscounts, discounts_on: bool = True) -> np.ndarray:
    """``out[earmark, realized]`` mismatch factors for a K-scenario ladder."""
    if not discounts_on:
        return np.ones((k, k))
    e = np.arange(k)[:, None]
    r = np.arange(k)[None, :]
    return np.where(r == e, 1.0, np.where(r < e, d.upper, d.lower))


def vintage_weights(
    n_periods: int, period_years: float, curve: DecayCurve, historical_on: bool = True
) -> np.ndarray:
    """``out[t]`` = sum of historical factors over every vintage alive at period t,
    assuming one equal-size raise per period starting at period 0."""
    ages = np.arange(n_periods) * period_years
    f = np.array([historical_factor(a, curve, historical_on) for a in ages])
    return np.cumsum(f)


def expected_income_per_unit(
    probs: Sequence[float],
    table: AdaptationReturnTable,
    allocation: Sequence[float],
    d: MismatchDiscounts,
    discounts_on: bool = True,
) -> float:
    """Expected single-vintage, age-zero income per unit of notional."""
    m = mismatch_matrix(len(table), d, discounts_on)
    eff = np.asarray(allocation) @ m
    return float(np.asarray(probs) @ (eff * np.asarray(table.returns)))
