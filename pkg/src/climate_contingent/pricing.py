"""Contract prices that equalize the Adapter's and Backer's expected outcomes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .contracts import minimum_prices, risk_free_growth
from .engine import SimulationConfig, simulate_batch
from .errors import DomainError, InfeasibleError
from .search import direct_search

ANNUALIZATION_FORMULA = (
    "((W0 + G + E_B) / (W0 + G)) ** (1 / total_years) - 1, "
    "G = n_periods * W0 * ((1 + s) ** period_years - 1)"
)
TOTAL_RETURN_FORMULA = "((W0 + G + E_B) / W0) ** (1 / total_years) - 1"
FLOOR_TOL = 1e-12


def evaluate_prices(
    prices: Sequence[float], cfg: SimulationConfig, check_floors: bool = True
) -> tuple[float, float]:
    """Mean (outcome_A, outcome_B) over ``cfg.n_replications`` common-random-number runs."""
    prices = tuple(float(p) for p in prices)
    if check_floors:
        floors = minimum_prices(cfg.ladder, cfg.risk_free_rate, cfg.period_years)
        for name, p, f, a, b in zip(cfg.ladder.names, prices, floors, cfg.allocation_A, cfg.allocation_B):
            if (a > 0 or b > 0) and p < f * (1 - FLOOR_TOL):
                raise DomainError(f"price {p} for {name!r} is below its minimum {f}")
    res = simulate_batch(cfg.with_(prices=prices))
    return float(res.outcome_A.mean()), float(res.outcome_B.mean())


def risk_free_baseline_gain(w0: float, n_periods: int, period_years: int, s: float) -> float:
    return n_periods * w0 * risk_free_growth(s, period_years)


def _baseline(w0, total_years, s, period_years):
    # simple accumulation: one fixed-notional risk-free gain per period
    return (total_years / period_years) * w0 * ((1.0 + s) ** period_years - 1.0)


def annualized_outperformance(
    e_b: float, w0: float, total_years: float, s: float, period_years: int = 10
) -> float:
    """Per-year rate by which the Backer's expected end wealth beats the
    risk-free counterfactual, compounding geometrically over ``total_years``."""
    if w0 <= 0 or total_years <= 0:
        raise DomainError("W0 and total_years must be > 0")
    base = w0 + _baseline(w0, total_years, s, period_years)
    return ((base + e_b) / base) ** (1.0 / total_years) - 1.0


def total_annualized_return(
    e_b: float, w0: float, total_years: float, s: float, period_years: int = 10
) -> float:
    base = w0 + _baseline(w0, total_years, s, period_years)
    return ((base + e_b) / w0) ** (1.0 / total_years) - 1.0


@dataclass(frozen=True)
class OptimizerReport:
    scenario_names: tuple[str, ...]
    prices: tuple[float, ...]
    minimum_prices: tuple[float, ...]
    optimized: tuple[bool, ...]
    objective: float
    baseline_objective: float
    evaluations: int
    converged: bool
    expected_A: float
    expected_B: float
    annualized_outperformance: float
    total_annualized_return: float
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "scenario_names": list(self.scenario_names),
            "prices": list(self.prices),
            "minimum_prices": list(self.minimum_prices),
            "optimized": list(self.optimized),
            "objective": self.objective,
            "baseline_objective": self.baseline_objective,
            "evaluations": self.evaluations,
            "converged": self.converged,
            "expected_A": self.expected_A,
            "expected_B": self.expected_B,
            "annualized_outperformance": self.annualized_outperformance,
            "total_annualized_return": self.total_annualized_return,
            "annualization_formula": ANNUALIZATION_FORMULA,
            "total_return_formula": TOTAL_RETURN_FORMULA,
            **self.meta,
        }


def _resolve_bounds(cfg, floors, active, bounds):
    """Per active scenario (lower, upper); lower is never below the floor."""
    names = cfg.ladder.names
    lo, hi = [], []
    for k in active:
        f = floors[k]
        if bounds is None:
            b = (f, 10.0 * f)
        elif isinstance(bounds, Mapping):
            b = bounds.get(names[k], (f, 10.0 * f))
        else:
            b = bounds[k]
        lower, upper = max(float(b[0]), f), float(b[1])
        if upper < lower:
            raise InfeasibleError(
                f"price bounds for {names[k]!r} ({b[0]}, {b[1]}) exclude the minimum price {f:.6g}"
            )
        lo.append(lower)
        hi.append(upper)
    return np.array(lo), np.array(hi)


def optimize_prices(
    cfg: SimulationConfig,
    bounds: Optional[Mapping[str, tuple[float, float]] | Sequence[tuple[float, float]]] = None,
    budget: int = 500,
    tolerance: Optional[float] = None,
) -> OptimizerReport:
    """Search prices of allocated scenarios minimizing ``|E[A] - E[B]|``.

    Starts at the minimum prices, which are also hard floors. ``tolerance`` is
    in currency units and defaults to ``1e-4 * W0 * n_periods``.
    """
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    floors = minimum_prices(cfg.ladder, cfg.risk_free_rate, cfg.period_years)
    active = [k for k in range(len(cfg.ladder)) if cfg.allocation_A[k] > 0 or cfg.allocation_B[k] > 0]
    lower, upper = _resolve_bounds(cfg, floors, active, bounds)
    scale = cfg.initial_assets * cfg.n_periods
    if tolerance is None:
        tolerance = 1e-4 * scale

    base_prices = list(cfg.prices)
    for k in active:
        base_prices[k] = floors[k]

    def full(x):
        p = list(base_prices)
        for k, v in zip(active, x):
            p[k] = float(v)
        return tuple(p)

    def objective(x):
        ea, eb = evaluate_prices(full(x), cfg, check_floors=False)
        return abs(ea - eb) / scale

    x0 = lower.copy()
    baseline = objective(x0) * scale
    res = direct_search(
        objective, x0, lower, upper, budget=budget, target=tolerance / scale,
        initial_step=0.25 * np.maximum(x0, 1e-9),
    )
    prices = full(res.x)
    ea, eb = evaluate_prices(prices, cfg, check_floors=False)
    total_years = cfg.n_periods * cfg.period_years
    return OptimizerReport(
        scenario_names=cfg.ladder.names,
        prices=prices,
        minimum_prices=tuple(floors),
        optimized=tuple(k in active for k in range(len(cfg.ladder))),
        objective=abs(ea - eb),
        baseline_objective=baseline,
        evaluations=res.nfev + 2,
        converged=abs(ea - eb) <= tolerance,
        expected_A=ea,
        expected_B=eb,
        annualized_outperformance=annualized_outperformance(
            eb, cfg.initial_assets, total_years, cfg.risk_free_rate, cfg.period_years),
        total_annualized_return=total_annualized_return(
            eb, cfg.initial_assets, total_years, cfg.risk_free_rate, cfg.period_years),
        meta={"tolerance": tolerance, "n_replications": cfg.n_replications,
              "n_periods": cfg.n_periods, "master_seed": cfg.master_seed},
    )
