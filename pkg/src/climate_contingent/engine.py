"""Period-by-period wealth dynamics for the Adapter (A) and Backer (B).

Each period both parties write contracts with notional ``W0 * allocation[k]``
triggering at scenario ``k``. A spends the proceeds on adaptation (net-zero
cash at raise time), earns adaptation income on its ledger, and pays out on
triggered contracts. B gains ``payout - notional`` per contract and is
benchmarked against a risk-free account earning ``W0 * ((1+s)**y - 1)`` per
period. Gains accrue additively; notional never compounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import streams
from .adaptation import (
    AdaptationReturnTable,
    DecayCurve,
    MismatchDiscounts,
    VintageLedger,
    adaptation_income,
    mismatch_matrix,
    vintage_weights,
)
from .contracts import ClimateContract, minimum_prices, payout, risk_free_growth
from .errors import ConfigError, DomainError
from .scenarios import ScenarioId, ScenarioLadder, sample_scenario, sample_indices

ALLOC_TOL = 1e-9


def extreme_only(ladder: ScenarioLadder, name: str = "extreme") -> tuple[float, ...]:
    """Allocation with everything on one scenario (``"Capital Allocation 1"`` for extreme)."""
    k = ladder.rank(name)
    return tuple(1.0 if i == k else 0.0 for i in range(len(ladder)))


def spread_above_lowest(ladder: ScenarioLadder) -> tuple[float, ...]:
    """Equal split over every scenario above the least extreme (``"Capital Allocation 2"``)."""
    k = len(ladder)
    if k == 1:
        return (1.0,)
    return (0.0,) + (1.0 / (k - 1),) * (k - 1)


@dataclass(frozen=True)
class SimulationConfig:
    initial_assets: float = 1e8
    risk_free_rate: float = 0.01
    period_years: int = 10
    n_periods: int = 5
    n_replications: int = 500
    ladder: ScenarioLadder = field(default_factory=ScenarioLadder.default)
    prices: Optional[tuple[float, ...]] = None
    allocation_A: Optional[tuple[float, ...]] = None
    allocation_B: Optional[tuple[float, ...]] = None
    returns: AdaptationReturnTable = field(default_factory=AdaptationReturnTable)
    discounts: MismatchDiscounts = field(default_factory=MismatchDiscounts)
    discounts_on: bool = False
    decay: DecayCurve = field(default_factory=DecayCurve)
    historical_on: bool = False
    master_seed: int = 0

    def __post_init__(self):
        k = len(self.ladder)
        if self.initial_assets <= 0:
            raise ConfigError("must be > 0", "initial_assets")
        if self.risk_free_rate < 0:
            raise ConfigError("must be >= 0", "risk_free_rate")
        if self.period_years < 1:
            raise ConfigError("must be >= 1", "period_years")
        if self.n_periods < 1:
            raise ConfigError("must be >= 1", "n_periods")
        if self.n_replications < 1:
            raise ConfigError("must be >= 1", "n_replications")
        if len(self.returns) != k:
            raise ConfigError(f"needs {k} entries, got {len(self.returns)}", "returns")
        if self.prices is None:
            object.__setattr__(
                self, "prices",
                tuple(minimum_prices(self.ladder, self.risk_free_rate, self.period_years)),
            )
        if self.allocation_A is None:
            object.__setattr__(self, "allocation_A", extreme_only(self.ladder, self.ladder.names[-1]))
        if self.allocation_B is None:
            object.__setattr__(self, "allocation_B", self.allocation_A)
        for name in ("prices", "allocation_A", "allocation_B"):
            v = tuple(float(x) for x in getattr(self, name))
            object.__setattr__(self, name, v)
            if len(v) != k:
                raise ConfigError(f"needs {k} entries, got {len(v)}", name)
            if not all(math.isfinite(x) for x in v):
                raise ConfigError("entries must be finite", name)
        for name in ("allocation_A", "allocation_B"):
            a = getattr(self, name)
            if any(x < 0 or x > 1 for x in a):
                raise ConfigError("fractions must be in [0, 1]", name)
            if math.fsum(a) > 1 + ALLOC_TOL:
                raise ConfigError(f"fractions sum to {math.fsum(a)}, must be <= 1", name)
        for k_, p in enumerate(self.prices):
            if (self.allocation_A[k_] > 0 or self.allocation_B[k_] > 0) and not p > 0:
                raise ConfigError(f"price for allocated scenario {self.ladder.names[k_]!r} must be > 0", "prices")

    @property
    def risk_free_period_gain(self) -> float:
        return self.initial_assets * risk_free_growth(self.risk_free_rate, self.period_years)

    def with_(self, **changes) -> "SimulationConfig":
        return replace(self, **changes)


@dataclass
class AdapterState:
    wealth: float
    ledger: VintageLedger = field(default_factory=VintageLedger)


@dataclass
class BackerState:
    wealth: float
    wealth_risk_free: float


@dataclass(frozen=True)
class PeriodFlows:
    notional_A: float
    notional_B: float
    income: float
    payouts_A: float
    payouts_B: float
    delta_A: float
    delta_B: float
    delta_risk_free: float


def _contracts(cfg: SimulationConfig, allocation: Sequence[float]) -> list[ClimateContract]:
    out = []
    for sid, a, p in zip(cfg.ladder.scenarios, allocation, cfg.prices):
        if a > 0:
            out.append(ClimateContract(cfg.initial_assets * a, p, sid, cfg.period_years))
    return out


def run_period(
    state_A: AdapterState,
    state_B: BackerState,
    realized: ScenarioId,
    cfg: SimulationConfig,
    period: int,
) -> PeriodFlows:
    """Advance both parties through one period in place; returns the cash flows."""
    sold = _contracts(cfg, cfg.allocation_A)
    bought = _contracts(cfg, cfg.allocation_B)
    for c in sold:
        state_A.ledger.add(period, c.trigger, c.principal)
    income = adaptation_income(
        state_A.ledger, realized, cfg.returns, cfg.discounts, cfg.decay,
        current_period=period, period_years=cfg.period_years,
        discounts_on=cfg.discounts_on, historical_on=cfg.historical_on,
    )
    payouts_A = math.fsum(payout(c, realized) for c in sold)
    payouts_B = math.fsum(payout(c, realized) for c in bought)
    notional_A = math.fsum(c.principal for c in sold)
    notional_B = math.fsum(c.principal for c in bought)
    delta_A = income - payouts_A
    delta_B = payouts_B - notional_B
    delta_rf = cfg.risk_free_period_gain
    state_A.wealth += delta_A
    state_B.wealth += delta_B
    state_B.wealth_risk_free += delta_rf
    return PeriodFlows(notional_A, notional_B, income, payouts_A, payouts_B, delta_A, delta_B, delta_rf)


@dataclass(frozen=True)
class ReplicationResult:
    replication: int
    realized: tuple[int, ...]
    wealth_A: np.ndarray
    wealth_B: np.ndarray
    wealth_risk_free: np.ndarray
    outcome_A: float
    outcome_B: float


def replication_rng(cfg: SimulationConfig, replication_index: int) -> np.random.Generator:
    return streams.make_rng(cfg.master_seed, streams.REPLICATION, replication_index)


def run_replication(cfg: SimulationConfig, replication_index: int) -> ReplicationResult:
    rng = replication_rng(cfg, replication_index)
    w0 = cfg.initial_assets
    a, b = AdapterState(w0), BackerState(w0, w0)
    wa, wb, wr = [w0], [w0], [w0]
    realized = []
    for t in range(cfg.n_periods):
        s = sample_scenario(cfg.ladder, rng)
        realized.append(s.index)
        run_period(a, b, s, cfg, t)
        wa.append(a.wealth)
        wb.append(b.wealth)
        wr.append(b.wealth_risk_free)
    wa, wb, wr = np.array(wa), np.array(wb), np.array(wr)
    return ReplicationResult(
        replication_index, tuple(realized), wa, wb, wr,
        outcome_A=float(wa[-1] - wa[0]), outcome_B=float(wb[-1] - wr[-1]),
    )


def outcome_A(result: ReplicationResult) -> float:
    """Change in the Adapter's assets from start to end of the run."""
    return float(result.wealth_A[-1] - result.wealth_A[0])


def outcome_B(result: ReplicationResult) -> float:
    """Backer's final assets with contracts minus the all-risk-free counterfactual."""
    return float(result.wealth_B[-1] - result.wealth_risk_free[-1])


@lru_cache(maxsize=32)
def _draws(ladder: ScenarioLadder, master_seed: int, n_replications: int, n_periods: int) -> np.ndarray:
    out = np.empty((n_replications, n_periods), dtype=np.int64)
    for r in range(n_replications):
        rng = streams.make_rng(master_seed, streams.REPLICATION, r)
        out[r] = sample_indices(ladder, rng, n_periods)
    out.flags.writeable = False
    return out


def draw_scenarios(cfg: SimulationConfig) -> np.ndarray:
    """Realized scenario ranks, shape (n_replications, n_periods).

    Row ``r`` matches the sequence ``run_replication(cfg, r)`` draws.
    """
    return _draws(cfg.ladder, cfg.master_seed, cfg.n_replications, cfg.n_periods)


@dataclass(frozen=True)
class BatchResult:
    realized: np.ndarray
    outcome_A: np.ndarray
    outcome_B: np.ndarray

    def trigger_counts(self, k: int) -> np.ndarray:
        """Per replication, how many periods triggered a contract on each scenario, shape (R, K)."""
        return (self.realized[:, :, None] >= np.arange(k)[None, None, :]).sum(axis=1)


def simulate_batch(cfg: SimulationConfig) -> BatchResult:
    """Vectorized equivalent of ``run_replication`` over every replication."""
    realized = draw_scenarios(cfg)
    k = len(cfg.ladder)
    w0 = cfg.initial_assets
    alloc_a = np.asarray(cfg.allocation_A)
    alloc_b = np.asarray(cfg.allocation_B)
    prices = np.asarray(cfg.prices)
    trig = realized[:, :, None] >= np.arange(k)[None, None, :]

    mm = mismatch_matrix(k, cfg.discounts, cfg.discounts_on)
    effective = alloc_a @ mm  # per realized rank
    rate = np.asarray(cfg.returns.returns)
    alive = vintage_weights(cfg.n_periods, cfg.period_years, cfg.decay, cfg.historical_on)
    income = w0 * (effective * rate)[realized] * alive[None, :]

    pay_a = w0 * (trig * (alloc_a * prices)).sum(axis=2)
    gain_b = w0 * (trig * (alloc_b * prices)).sum(axis=2) - w0 * alloc_b.sum()
    out_a = (income - pay_a).sum(axis=1)
    out_b = gain_b.sum(axis=1) - cfg.n_periods * cfg.risk_free_period_gain
    return BatchResult(realized, out_a, out_b)


@dataclass(frozen=True)
class OutcomeStats:
    mean: float
    se: float
    ci_low: float
    ci_high: float
    level: float
    n: int

    def to_dict(self) -> dict:
        return {
            "mean": self.mean, "se": self.se, "ci_low": self.ci_low,
            "ci_high": self.ci_high, "level": self.level, "n": self.n,
        }


def bootstrap_ci(
    values: Sequence[float],
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> OutcomeStats:
    """Mean, standard error, and percentile-bootstrap CI of the mean."""
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise DomainError("bootstrap_ci needs at least one value")
    if not 0 < level < 1:
        raise DomainError(f"level must be in (0, 1), got {level}")
    if np.all(x == x[0]):
        c = float(x[0])
        return OutcomeStats(c, 0.0, c, c, level, int(x.size))
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    res = stats.bootstrap(
        (x,), np.mean, n_resamples=n_resamples, confidence_level=level,
        method="percentile", vectorized=True, batch=50,
        random_state=streams.make_rng(seed, streams.BOOTSTRAP),
    )
    lo, hi = float(res.confidence_interval.low), float(res.confidence_interval.high)
    return OutcomeStats(mean, se, lo, hi, level, int(x.size))
