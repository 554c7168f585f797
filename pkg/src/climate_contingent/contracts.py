"""Single-trigger climate contracts and their break-even pricing."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError
from .scenarios import ScenarioId, ScenarioLadder, cumulative_trigger_prob


@dataclass(frozen=True)
class RiskFreeSpec:
    annual_rate: float
    term_years: int

    def __post_init__(self):
        if self.annual_rate < 0:
            raise DomainError(f"annual_rate must be >= 0, got {self.annual_rate}")
        if self.term_years < 1:
            raise DomainError(f"term_years must be >= 1, got {self.term_years}")

    @property
    def growth(self) -> float:
        return risk_free_growth(self.annual_rate, self.term_years)


@dataclass(frozen=True)
class ClimateContract:
    """Backer pays ``principal`` up front; Adapter repays ``price * principal``
    once, at term end, if the realized scenario is at or above ``trigger``.
    Otherwise the Adapter keeps the principal."""

    principal: float
    price: float
    trigger: ScenarioId
    term_years: int = 10

    def __post_init__(self):
        if not self.principal > 0:
            raise DomainError(f"principal must be > 0, got {self.principal}")
        if not self.price > 0:
            raise DomainError(f"price must be > 0, got {self.price}")
        if self.term_years < 1:
            raise DomainError(f"term_years must be >= 1, got {self.term_years}")

    def to_dict(self) -> dict:
        return {
            "principal": self.principal,
            "price": self.price,
            "trigger_name": self.trigger.name,
            "term_years": self.term_years,
        }

    @classmethod
    def from_dict(cls, d: dict, ladder: ScenarioLadder) -> "ClimateContract":
        return cls(
            principal=float(d["principal"]),
            price=float(d["price"]),
            trigger=ladder.get(d["trigger_name"]),
            term_years=int(d["term_years"]),
        )


def risk_free_growth(s: float, y: int) -> float:
    """Total fractional return of ``y`` years compounded at ``s``."""
    if s < 0:
        raise DomainError(f"rate must be >= 0, got {s}")
    if y < 1:
        raise DomainError(f"years must be >= 1, got {y}")
    return (1.0 + s) ** y - 1.0


def minimum_price(s: float, y: int, cum_p: float) -> float:
    """Payout multiple at which buying the contract matches risk-free investing
    in expectation: ``(1+s)**y / cum_p``."""
    if not 0 < cum_p <= 1:
        raise DomainError(f"cumulative trigger probability must be in (0, 1], got {cum_p}")
    return (1.0 + risk_free_growth(s, y)) / cum_p


def minimum_prices(ladder: ScenarioLadder, s: float, y: int) -> list[float]:
    return [minimum_price(s, y, cumulative_trigger_prob(ladder, sid)) for sid in ladder.scenarios]


def is_triggered(trigger: ScenarioId, realized: ScenarioId) -> bool:
    if trigger.ladder_names != realized.ladder_names:
        raise DomainError(
            f"realized scenario {realized.name!r} is not on the contract's ladder"
        )
    return realized.index >= trigger.index


def payout(contract: ClimateContract, realized: ScenarioId) -> float:
    if is_triggered(contract.trigger, realized):
        return contract.price * contract.principal
    return 0.0
