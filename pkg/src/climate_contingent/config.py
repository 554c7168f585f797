"""Experiment configuration: one JSON document, validated in full up front.

Sections mirror the two input tables: a scenario ladder with simulation and
adaptation settings, and a bond term sheet with its climate-data source.
Unknown keys anywhere are rejected.
"""

from __future__ import annotations

import copy
import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Optional, Union

from .adaptation import DEFAULT_RETURNS, AdaptationReturnTable, DecayCurve, MismatchDiscounts
from .ccb import CCBSpec
from .climate_data import YearlySampler
from .contracts import minimum_prices
from .engine import SimulationConfig, extreme_only, spread_above_lowest
from .errors import ConfigError, DomainError
from .scenarios import DEFAULT_NAMES, DEFAULT_PROBS, ScenarioLadder

Allocation = Union[str, list, dict, None]


@dataclass
class SimulationSection:
    initial_assets: float = 1e8
    risk_free_rate: float = 0.01
    period_years: int = 10
    n_periods: int = 5
    n_replications: int = 500
    prices: Optional[Union[list, dict]] = None
    allocation_A: Allocation = "spread"
    allocation_B: Allocation = None
    n_bootstrap: int = 1000
    ci_level: float = 0.95
    histogram_bins: int = 30


@dataclass
class AdaptationSection:
    returns: list = field(default_factory=lambda: list(DEFAULT_RETURNS))
    upper_discount: float = 0.5
    lower_discount: float = 0.75
    discounts_on: bool = True
    historical_on: bool = True
    decay_midpoint_years: float = 20.0
    decay_steepness: float = 0.15
    decay_horizon_years: float = 40.0


@dataclass
class PriceOptimizerSection:
    budget: int = 500
    tolerance: Optional[float] = None
    bounds: Optional[dict] = None


@dataclass
class ClimateDataSection:
    path: Optional[str] = None
    location: str = "northeast_avg"
    scenario_weights: Optional[dict] = None
    sigma: float = 0.0
    n_pool_samples: int = 10000


@dataclass
class CCBSection:
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
    n_sims: int = 2000
    tolerance_rel: float = 1e-3
    budget: int = 5000
    stratified: bool = True
    coherent_paths: bool = False
    path_samples_out: int = 200


SECTIONS = {
    "simulation": SimulationSection,
    "adaptation": AdaptationSection,
    "price_optimizer": PriceOptimizerSection,
    "climate_data": ClimateDataSection,
    "ccb": CCBSection,
}
TOP_LEVEL = {"master_seed", "output_dir", "scenarios", *SECTIONS}

_INT = (int,)
_NUM = (int, float)


def _check_type(value, default, path):
    if default is None or value is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", path)
    elif isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, _INT):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"expected an integer, got {value!r}", path)
    elif isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, _NUM):
            raise ConfigError(f"expected a number, got {value!r}", path)
        return float(value)
    elif isinstance(default, str) and not isinstance(value, (str, list, dict)):
        raise ConfigError(f"expected a string, got {value!r}", path)
    return value


def _section(cls, raw, name):
    if not isinstance(raw, dict):
        raise ConfigError("expected an object", name)
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(raw) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}; allowed: {sorted(known)}", name)
    obj = cls()
    for k, v in raw.items():
        setattr(obj, k, _check_type(v, getattr(obj, k), f"{name}.{k}"))
    return obj


@dataclass
class ExperimentConfig:
    master_seed: int = 0
    output_dir: str = "out"
    scenarios: list = field(default_factory=lambda: [
        {"name": n, "probability": p} for n, p in zip(DEFAULT_NAMES, DEFAULT_PROBS)])
    simulation: SimulationSection = field(default_factory=SimulationSection)
    adaptation: AdaptationSection = field(default_factory=AdaptationSection)
    price_optimizer: PriceOptimizerSection = field(default_factory=PriceOptimizerSection)
    climate_data: ClimateDataSection = field(default_factory=ClimateDataSection)
    ccb: CCBSection = field(default_factory=CCBSection)

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(raw) - TOP_LEVEL)
        if unknown:
            raise ConfigError(f"unknown top-level key(s) {unknown}; allowed: {sorted(TOP_LEVEL)}")
        cfg = cls()
        if "master_seed" in raw:
            cfg.master_seed = _check_type(raw["master_seed"], 0, "master_seed")
        if "output_dir" in raw:
            cfg.output_dir = str(raw["output_dir"])
        if "scenarios" in raw:
            cfg.scenarios = raw["scenarios"]
        for name, sec in SECTIONS.items():
            if name in raw:
                setattr(cfg, name, _section(sec, raw[name], name))
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()

    # -- domain objects --------------------------------------------------

    def ladder(self) -> ScenarioLadder:
        recs = self.scenarios
        if not isinstance(recs, list) or not recs:
            raise ConfigError("expected a nonempty list of {name, probability}", "scenarios")
        for i, r in enumerate(recs):
            if not isinstance(r, dict) or set(r) != {"name", "probability"}:
                raise ConfigError("each entry needs exactly 'name' and 'probability'", f"scenarios[{i}]")
        try:
            return ScenarioLadder.from_records(recs)
        except (DomainError, TypeError, ValueError) as e:
            raise ConfigError(str(e), "scenarios") from None

    def _per_scenario(self, value, ladder, path, default=None):
        """List in ladder order, or ``{name: value}`` with gaps taken from ``default``."""
        names = ladder.names
        default = [0.0] * len(names) if default is None else default
        try:
            if isinstance(value, dict):
                unknown = sorted(set(value) - set(names))
                if unknown:
                    raise ConfigError(f"unknown scenario(s) {unknown}", path)
                return tuple(float(value.get(n, d)) for n, d in zip(names, default))
            if isinstance(value, list):
                if len(value) != len(names):
                    raise ConfigError(f"needs {len(names)} entries, got {len(value)}", path)
                return tuple(float(v) for v in value)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"entries must be numbers ({e})", path) from None
        raise ConfigError(f"expected a list or object, got {value!r}", path)

    def _allocation(self, value, ladder, path):
        if value is None:
            return None
        if value == "spread":
            return spread_above_lowest(ladder)
        if isinstance(value, str):
            if value.endswith("_only"):
                try:
                    return extreme_only(ladder, value[: -len("_only")].replace("_", " "))
                except DomainError as e:
                    raise ConfigError(str(e), path) from None
            raise ConfigError(f"expected 'spread', '<scenario>_only', a list or an object; got {value!r}", path)
        return self._per_scenario(value, ladder, path)

    def simulation_config(self) -> SimulationConfig:
        ladder = self.ladder()
        s, a = self.simulation, self.adaptation
        try:
            table = AdaptationReturnTable(tuple(a.returns))
        except (DomainError, TypeError, ValueError) as e:
            raise ConfigError(str(e), "adaptation.returns") from None
        try:
            discounts = MismatchDiscounts(a.upper_discount, a.lower_discount)
        except DomainError as e:
            raise ConfigError(str(e), "adaptation") from None
        try:
            decay = DecayCurve(a.decay_midpoint_years, a.decay_steepness, a.decay_horizon_years)
        except DomainError as e:
            raise ConfigError(str(e), "adaptation.decay_steepness") from None
        prices = None
        if s.prices is not None:
            try:
                floors = minimum_prices(ladder, s.risk_free_rate, s.period_years)
            except DomainError as e:
                raise ConfigError(str(e), "simulation.risk_free_rate") from None
            prices = self._per_scenario(s.prices, ladder, "simulation.prices", floors)
        alloc_a = self._allocation(s.allocation_A, ladder, "simulation.allocation_A")
        alloc_b = self._allocation(s.allocation_B, ladder, "simulation.allocation_B")
        try:
            return SimulationConfig(
                initial_assets=s.initial_assets, risk_free_rate=s.risk_free_rate,
                period_years=s.period_years, n_periods=s.n_periods,
                n_replications=s.n_replications, ladder=ladder, prices=prices,
                allocation_A=alloc_a, allocation_B=alloc_b,
                returns=table, discounts=discounts, discounts_on=a.discounts_on,
                decay=decay, historical_on=a.historical_on, master_seed=self.master_seed,
            )
        except ConfigError as e:
            raise ConfigError(e.message, f"simulation.{e.field}" if e.field else "simulation") from None

    def price_bounds(self):
        b = self.price_optimizer.bounds
        if b is None:
            return None
        names = set(self.ladder().names)
        for k, v in b.items():
            if k not in names:
                raise ConfigError(f"unknown scenario {k!r}", "price_optimizer.bounds")
            if not (isinstance(v, list) and len(v) == 2):
                raise ConfigError(f"expected [lower, upper] for {k!r}", "price_optimizer.bounds")
        return {k: (float(v[0]), float(v[1])) for k, v in b.items()}

    def sampler(self) -> YearlySampler:
        c = self.climate_data
        try:
            return YearlySampler(
                weights=None if c.scenario_weights is None else tuple(c.scenario_weights.items()),
                sigma=c.sigma,
            )
        except (DomainError, AttributeError) as e:
            raise ConfigError(str(e), "climate_data") from None

    def ccb_spec(self) -> CCBSpec:
        c = self.ccb
        kw = {f.name: getattr(c, f.name) for f in fields(CCBSection) if f.name != "path_samples_out"}
        sampler = self.sampler()
        try:
            return CCBSpec(
                **kw, location=self.climate_data.location, sampler=sampler,
                n_pool_samples=self.climate_data.n_pool_samples,
            )
        except ConfigError as e:
            raise ConfigError(e.message, f"ccb.{e.field}" if e.field else "ccb") from None

    def validate(self) -> None:
        s = self.simulation
        if s.n_bootstrap < 1:
            raise ConfigError("must be >= 1", "simulation.n_bootstrap")
        if not 0 < s.ci_level < 1:
            raise ConfigError("must be in (0, 1)", "simulation.ci_level")
        if s.histogram_bins < 1:
            raise ConfigError("must be >= 1", "simulation.histogram_bins")
        if self.price_optimizer.budget < 1:
            raise ConfigError("must be >= 1", "price_optimizer.budget")
        if self.ccb.path_samples_out < 0:
            raise ConfigError("must be >= 0", "ccb.path_samples_out")
        self.simulation_config()
        self.price_bounds()
        self.ccb_spec()


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def parse_override(text: str) -> tuple[str, Any]:
    """``key=value``; the value is parsed as JSON, falling back to a bare string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _resolve_key(raw: dict, key: str) -> list[str]:
    parts = key.split(".")
    if len(parts) > 1 or key in TOP_LEVEL:
        return parts
    hits = [sec for sec, cls in SECTIONS.items() if key in {f.name for f in fields(cls)}]
    if len(hits) == 1:
        return [hits[0], key]
    if not hits:
        raise ConfigError(f"unknown override key {key!r}")
    raise ConfigError(f"override key {key!r} is ambiguous; use one of {[h + '.' + key for h in hits]}")


def apply_overrides(raw: dict, overrides) -> dict:
    out = copy.deepcopy(raw)
    for key, value in overrides:
        parts = _resolve_key(out, key)
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"cannot set {key!r}: {p!r} is not an object")
        node[parts[-1]] = value
    return out


def load_raw(path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from None


def load_config(path=None, overrides=()) -> ExperimentConfig:
    raw = {} if path is None else load_raw(path)
    return ExperimentConfig.from_dict(apply_overrides(raw, overrides))


def sweep_points(sweep: dict) -> list[list[tuple[str, Any]]]:
    """Cartesian product of ``{key: [values...]}`` in key order."""
    if not isinstance(sweep, dict) or not sweep:
        raise ConfigError("sweep file must be a nonempty object of key -> list of values")
    keys = list(sweep)
    for k in keys:
        if not isinstance(sweep[k], list) or not sweep[k]:
            raise ConfigError(f"sweep values for {k!r} must be a nonempty list")
    return [list(zip(keys, combo)) for combo in itertools.product(*(sweep[k] for k in keys))]
