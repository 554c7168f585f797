"""Box-constrained derivative-free minimization with an evaluation budget.

Thin wrapper over scipy's bounded Nelder-Mead that tracks the best point
ever evaluated and stops as soon as the objective reaches ``target``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, InfeasibleError


@dataclass(frozen=True)
class SearchResult:
    x: np.ndarray
    fun: float
    nfev: int
    converged: bool


class _Tracker:
    def __init__(self, f, lower, upper, target, budget):
        self.f = f
        self.lower, self.upper = lower, upper
        self.target = target
        self.budget = budget
        self.nfev = 0
        self.best_x = None
        self.best_f = np.inf

    def __call__(self, x):
        x = np.clip(x, self.lower, self.upper)
        if self.nfev >= self.budget:
            return self.best_f
        val = float(self.f(x))
        self.nfev += 1
        if val < self.best_f:
            self.best_f, self.best_x = val, x.copy()
        return val

    def callback(self, intermediate_result):
        if self.best_f <= self.target or self.nfev >= self.budget:
            raise StopIteration


def direct_search(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    lower: Sequence[float],
    upper: Sequence[float],
    budget: int = 2000,
    target: float = -np.inf,
    initial_step: Optional[Sequence[float]] = None,
    xatol: float = 1e-10,
) -> SearchResult:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    if np.any(lower > upper):
        raise InfeasibleError(f"empty box: lower {lower} exceeds upper {upper}")
    x0 = np.clip(x0, lower, upper)
    track = _Tracker(f, lower, upper, target, budget)
    track(x0)
    if track.best_f <= target or x0.size == 0:
        return SearchResult(track.best_x, track.best_f, track.nfev, track.best_f <= target)

    if initial_step is None:
        initial_step = np.where(x0 != 0, 0.05 * np.abs(x0), 0.00025)
    step = np.broadcast_to(np.asarray(initial_step, dtype=float), x0.shape)
    simplex = [x0]
    for i in range(x0.size):
        v = x0.copy()
        v[i] = x0[i] + step[i] if x0[i] + step[i] <= upper[i] else x0[i] - step[i]
        simplex.append(np.clip(v, lower, upper))

    # Lower/upper equal on a coordinate pins it; scipy rejects degenerate bounds only when lb > ub.
    minimize(
        track, x0, method="Nelder-Mead", bounds=list(zip(lower, upper)),
        callback=track.callback,
        options={
            "initial_simplex": np.array(simplex), "maxfev": budget, "xatol": xatol,
            "fatol": 0.0, "adaptive": x0.size > 4,
        },
    )
    return SearchResult(track.best_x, track.best_f, track.nfev, track.best_f <= target)
