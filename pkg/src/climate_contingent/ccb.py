"""Climate-contingent bonds.

A CCB pays an annual coupon on unit principal whose rate is looked up from
the bin containing that year's climate outcome, and returns principal at
maturity. The per-bin schedule is solved so that the bond's expected NPV
equals that of a traditional bond paying the market rate.

Conventions: annual coupons in arrears, principal at maturity, annual
discounting at ``discount_rate``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import streams
from .climate_data import (
    OutcomeBins,
    ProjectionTable,
    YearlySampler,
    bin_of,
    pooled_distribution,
    quantile_bins,
    sample_paths,
)
from .errors import ConfigError, DomainError, StructuringError
from .search import direct_search


@dataclass(frozen=True)
class CCBSpec:
    lifetime_years: int = 25
    start_year: int = 2022
    discount_rate: float = 0.01
    market_rate: float = 0.04
    min_rate: float = 0.01
    max_rate: float = 0.07
    granularity: int = 15
    initial_fixed_years: int = 0
    blend_lambda: float = 1.0
    climate_variable: str = "high-tide flooding days per year"
    location: str = "northeast_avg"
    sampler: YearlySampler = field(default_factory=YearlySampler)
    n_sims: int = 2000
    n_pool_samples: int = 10000
    tolerance_rel: float = 1e-3
    budget: int = 5000
    stratified: bool = True
    coherent_paths: bool = False

    def __post_init__(self):
        if self.lifetime_years < 1:
            raise ConfigError("must be >= 1", "lifetime_years")
        if self.granularity < 2:
            raise ConfigError("must be >= 2", "granularity")
        if not self.min_rate <= self.max_rate:
            raise ConfigError(f"must be >= min_rate ({self.min_rate}), got {self.max_rate}", "max_rate")
        if not 0.0 <= self.blend_lambda <= 1.0:
            raise ConfigError("must be in [0, 1]", "blend_lambda")
        if not 0 <= self.initial_fixed_years <= self.lifetime_years:
            raise ConfigError("must be in [0, lifetime_years]", "initial_fixed_years")
        if self.discount_rate <= -1:
            raise ConfigError("must be > -1", "discount_rate")
        if self.n_sims < 1:
            raise ConfigError("must be >= 1", "n_sims")
        if self.n_pool_samples < 1:
            raise ConfigError("must be >= 1", "n_pool_samples")
        if self.tolerance_rel <= 0:
            raise ConfigError("must be > 0", "tolerance_rel")
        if self.budget < 1:
            raise ConfigError("must be >= 1", "budget")

    @property
    def years(self) -> list[int]:
        """Calendar year whose climate outcome sets each coupon, t = 1..T."""
        return list(range(self.start_year, self.start_year + self.lifetime_years))

    @property
    def target_npv(self) -> float:
        return npv_traditional(self.market_rate, self.discount_rate, self.lifetime_years)

    @property
    def tolerance(self) -> float:
        return self.tolerance_rel * self.target_npv


@dataclass(frozen=True)
class CouponSchedule:
    rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))

    def __len__(self):
        return len(self.rates)

    def check(self, spec: CCBSpec) -> None:
        r = self.rates
        if len(r) != spec.granularity:
            raise DomainError(f"schedule has {len(r)} rates, granularity is {spec.granularity}")
        if any(b < a for a, b in zip(r, r[1:])):
            raise DomainError(f"schedule rates must be nondecreasing, got {r}")
        if any(x < spec.min_rate or x > spec.max_rate for x in r):
            raise DomainError(f"schedule rates must lie in [{spec.min_rate}, {spec.max_rate}]")

    @classmethod
    def flat(cls, rate: float, g: int) -> "CouponSchedule":
        return cls((rate,) * g)


def discount_factors(d: float, t: int) -> np.ndarray:
    if d <= -1:
        raise DomainError(f"discount rate must be > -1, got {d}")
    return (1.0 + d) ** -np.arange(1, t + 1, dtype=float)


def npv_traditional(m: float, d: float, t: int) -> float:
    """NPV per unit principal of a ``t``-year annual-coupon bond at rate ``m``.

    Evaluated as ``1 + sum_t (m - d) v**t``, algebraically equal to
    ``sum_t m v**t + v**T``, so a par bond (m == d) is exactly 1.
    """
    disc = discount_factors(d, t)
    return 1.0 + math.fsum((m - d) * disc)


def _blend(rate, spec: CCBSpec):
    lam = spec.blend_lambda
    return np.clip(lam * rate + (1.0 - lam) * spec.market_rate, spec.min_rate, spec.max_rate)


def realized_coupon(
    year_index: int,
    climate_value: float,
    bins: OutcomeBins,
    schedule: CouponSchedule,
    spec: CCBSpec,
) -> float:
    """Coupon rate for bond year ``year_index`` (1-based) given that year's climate value."""
    if not 1 <= year_index <= spec.lifetime_years:
        raise DomainError(f"year_index must be in 1..{spec.lifetime_years}, got {year_index}")
    if year_index <= spec.initial_fixed_years:
        return spec.market_rate
    return float(_blend(schedule.rates[bin_of(climate_value, bins)], spec))


def _discounts(spec: CCBSpec) -> np.ndarray:
    return discount_factors(spec.discount_rate, spec.lifetime_years)


def coupon_matrix(paths: np.ndarray, bins: OutcomeBins, schedule: CouponSchedule, spec: CCBSpec) -> np.ndarray:
    """Realized coupon rates for each (path, year), vectorized ``realized_coupon``."""
    paths = np.atleast_2d(paths)
    rates = _blend(np.asarray(schedule.rates)[bins.index(paths)], spec)
    rates[:, : spec.initial_fixed_years] = spec.market_rate
    return rates


def npv_paths(paths: np.ndarray, bins: OutcomeBins, schedule: CouponSchedule, spec: CCBSpec) -> np.ndarray:
    disc = _discounts(spec)
    d = spec.discount_rate
    c = coupon_matrix(paths, bins, schedule, spec)
    return np.array([1.0 + math.fsum(row) for row in (c - d) * disc])


def npv_path(schedule: CouponSchedule, climate_path: Sequence[float], spec: CCBSpec, bins: OutcomeBins) -> float:
    path = np.asarray(climate_path, dtype=float)
    if path.shape != (spec.lifetime_years,):
        raise DomainError(f"path needs {spec.lifetime_years} yearly values, got shape {path.shape}")
    return float(npv_paths(path[None, :], bins, schedule, spec)[0])


def cumulative_returns(paths: np.ndarray, bins: OutcomeBins, schedule: CouponSchedule, spec: CCBSpec) -> np.ndarray:
    """Running discounted value received per path, principal included in the final year."""
    disc = _discounts(spec)
    flows = coupon_matrix(paths, bins, schedule, spec) * disc
    flows[:, -1] += disc[-1]
    return np.cumsum(flows, axis=1)


@dataclass(frozen=True)
class NPVEstimate:
    mean: float
    se: float
    n: int


def _estimate(values: np.ndarray) -> NPVEstimate:
    n = values.size
    mean = math.fsum(values) / n
    se = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return NPVEstimate(mean, se, n)


def simulate_climate_paths(
    table: ProjectionTable, spec: CCBSpec, n_sims: int, seed: int, stream: int = streams.CLIMATE_EVAL
) -> np.ndarray:
    return sample_paths(
        table, spec.location, spec.years, spec.sampler, n_sims, seed,
        stream=stream, stratified=spec.stratified, coherent=spec.coherent_paths,
    )


def expected_npv(
    schedule: CouponSchedule,
    table: ProjectionTable,
    spec: CCBSpec,
    bins: OutcomeBins,
    n_sims: Optional[int] = None,
    seed: int = 0,
    stream: int = streams.CLIMATE_EVAL,
) -> NPVEstimate:
    """Mean NPV over independently simulated climate paths.

    ``se`` is the iid standard error ``std / sqrt(n)``; with stratified
    sampling it overstates the true Monte-Carlo error.
    """
    n_sims = spec.n_sims if n_sims is None else n_sims
    if n_sims < 1:
        raise DomainError(f"n_sims must be >= 1, got {n_sims}")
    paths = simulate_climate_paths(table, spec, n_sims, seed, stream)
    return _estimate(npv_paths(paths, bins, schedule, spec))


def build_bins(table: ProjectionTable, spec: CCBSpec, seed: int = 0) -> tuple[OutcomeBins, np.ndarray]:
    """Equal-mass bins from the outcome distribution pooled over the bond's years."""
    rng = streams.make_rng(seed, streams.CLIMATE_POOL)
    pooled = pooled_distribution(table, spec.location, spec.years, spec.sampler, spec.n_pool_samples, rng)
    return quantile_bins(pooled, spec.granularity), pooled


def schedule_from_weights(w: np.ndarray, spec: CCBSpec) -> CouponSchedule:
    """Map ``G + 1`` nonnegative weights to a monotone schedule in [min_rate, max_rate].

    The first weight lifts the lowest bin above ``min_rate``; the last is
    headroom left below ``max_rate``.
    """
    w = np.abs(np.asarray(w, dtype=float))
    total = w.sum()
    if total == 0:
        return CouponSchedule.flat(spec.min_rate, spec.granularity)
    frac = np.minimum(np.cumsum(w)[: spec.granularity] / total, 1.0)
    rates = spec.min_rate + (spec.max_rate - spec.min_rate) * frac
    rates = np.maximum.accumulate(np.clip(rates, spec.min_rate, spec.max_rate))
    return CouponSchedule(tuple(rates))


@dataclass(frozen=True)
class ScheduleReport:
    target_npv: float
    expected_npv: float
    se: float
    abs_error: float
    tolerance: float
    achievable_min: float
    achievable_max: float
    evaluations: int
    converged: bool
    n_sims: int
    seed: int

    def to_dict(self) -> dict:
        return {k: (float(v) if isinstance(v, np.floating) else v) for k, v in self.__dict__.items()}


def _linear_npv(paths: np.ndarray, bins: OutcomeBins, spec: CCBSpec):
    """Expected NPV as an affine map of the schedule over fixed paths.

    Coupons are ``lam * r[bin] + (1 - lam) * m``. With rates and ``m`` inside
    [min_rate, max_rate] the clamp never binds, so the path mean collapses to
    ``const + weight @ r``. (If ``m`` lies outside the band the target is
    unreachable and structuring fails before this is used.)
    """
    disc = _discounts(spec)
    idx = bins.index(paths)
    live = np.ones(spec.lifetime_years, dtype=bool)
    live[: spec.initial_fixed_years] = False
    g = spec.granularity
    weight = np.zeros(g)
    for t in np.flatnonzero(live):
        weight += np.bincount(idx[:, t], minlength=g) * disc[t]
    weight *= spec.blend_lambda / paths.shape[0]
    const = (
        spec.market_rate * disc[~live].sum()
        + (1.0 - spec.blend_lambda) * spec.market_rate * disc[live].sum()
        + disc[-1]
    )
    return const, weight


def optimize_schedule(
    spec: CCBSpec,
    bins: OutcomeBins,
    table: ProjectionTable,
    tolerance: Optional[float] = None,
    budget: Optional[int] = None,
    seed: int = 0,
) -> tuple[CouponSchedule, ScheduleReport]:
    """Solve a monotone per-bin schedule whose expected NPV matches the traditional bond.

    The search starts from a linear ramp ``min_rate -> max_rate`` and stops
    once the mismatch on the fitting paths is below a tenth of ``tolerance``.
    """
    tolerance = spec.tolerance if tolerance is None else tolerance
    budget = spec.budget if budget is None else budget
    if bins.n_bins != spec.granularity:
        raise DomainError(f"bins have {bins.n_bins} bins, granularity is {spec.granularity}")
    target = spec.target_npv
    paths = simulate_climate_paths(table, spec, spec.n_sims, seed, streams.CLIMATE_FIT)
    # extremes of the achievable range are the flat schedules at the rate bounds
    lo = _estimate(npv_paths(paths, bins, CouponSchedule.flat(spec.min_rate, bins.n_bins), spec)).mean
    hi = _estimate(npv_paths(paths, bins, CouponSchedule.flat(spec.max_rate, bins.n_bins), spec)).mean
    if not lo - tolerance <= target <= hi + tolerance:
        raise StructuringError(
            f"target NPV {target:.6f} is outside the achievable range "
            f"[{lo:.6f}, {hi:.6f}] for rates in [{spec.min_rate}, {spec.max_rate}]"
        )
    const, weight = _linear_npv(paths, bins, spec)

    def objective(w):
        return abs(const + weight @ np.asarray(schedule_from_weights(w, spec).rates) - target)

    g = spec.granularity
    w0 = np.r_[0.0, np.ones(g - 1), 0.0]
    res = direct_search(
        objective, w0, np.zeros(g + 1), np.full(g + 1, 10.0),
        budget=budget, target=0.1 * tolerance, initial_step=0.25,
    )
    schedule = schedule_from_weights(res.x, spec)
    schedule.check(spec)
    est = _estimate(npv_paths(paths, bins, schedule, spec))
    err = abs(est.mean - target)
    report = ScheduleReport(
        target_npv=target, expected_npv=est.mean, se=est.se, abs_error=err,
        tolerance=tolerance, achievable_min=lo, achievable_max=hi,
        evaluations=res.nfev, converged=err <= tolerance, n_sims=spec.n_sims, seed=seed,
    )
    return schedule, report
