"""Climate projection tables, yearly outcome sampling, and equal-mass binning.

Input CSV schema (UTF-8, header required, exact column order)::

    location,scenario,year,value
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import ndtri

from . import streams
from .errors import DataCoverageError, DomainError, IngestionError

HEADER = ("location", "scenario", "year", "value")
JITTER_SCALE = 1e-9
SAMPLE_FILE = "htf_northeast_sample.csv"


class DegenerateBinsWarning(UserWarning):
    pass


@dataclass
class ProjectionTable:
    """Projected climate-variable values keyed by (location, scenario, year)."""

    values: dict[tuple[str, str, int], float] = field(default_factory=dict)
    source: str = ""

    def __len__(self):
        return len(self.values)

    @property
    def locations(self) -> list[str]:
        return list(dict.fromkeys(k[0] for k in self.values))

    def scenarios(self, location: str) -> list[str]:
        return list(dict.fromkeys(k[1] for k in self.values if k[0] == location))

    def years(self, location: str, scenario: Optional[str] = None) -> list[int]:
        ys = {k[2] for k in self.values if k[0] == location and (scenario is None or k[1] == scenario)}
        return sorted(ys)

    def value(self, location: str, scenario: str, year: int) -> float:
        try:
            return self.values[(location, scenario, int(year))]
        except KeyError:
            raise DataCoverageError([(location, scenario, int(year))]) from None

    def matrix(self, location: str, scenarios: Sequence[str], years: Sequence[int]) -> np.ndarray:
        """Values shaped (len(years), len(scenarios)); raises listing every missing key."""
        missing = [
            (location, s, int(y)) for y in years for s in scenarios
            if (location, s, int(y)) not in self.values
        ]
        if missing:
            raise DataCoverageError(missing)
        return np.array([[self.values[(location, s, int(y))] for s in scenarios] for y in years])

    def summary(self) -> dict:
        out = {"source": self.source, "rows": len(self), "locations": {}}
        for loc in self.locations:
            out["locations"][loc] = {
                s: {"years": len(ys), "first": ys[0], "last": ys[-1]}
                for s in self.scenarios(loc)
                for ys in [self.years(loc, s)]
            }
        return out


def ingest_csv(path, nonnegative: bool = True, allow_sparse: bool = False) -> ProjectionTable:
    """Read and validate a projection CSV.

    Raises IngestionError naming the file line for malformed rows, duplicate
    keys, negative values (when ``nonnegative``), or year gaps within a
    (location, scenario) series (unless ``allow_sparse``).
    """
    path = Path(path)
    values: dict[tuple[str, str, int], float] = {}
    first_line: dict[tuple[str, str, int], int] = {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as e:
        raise IngestionError(f"{path}: cannot open ({e.strerror})") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != HEADER:
            raise IngestionError(f"{path}:1: header must be {','.join(HEADER)!r}, got {header!r}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(HEADER):
                raise IngestionError(f"{path}:{line}: expected 4 fields, got {len(row)}")
            loc, scen, year_s, value_s = (c.strip() for c in row)
            if not loc or not scen:
                raise IngestionError(f"{path}:{line}: empty location or scenario")
            try:
                year = int(year_s)
            except ValueError:
                raise IngestionError(f"{path}:{line}: year {year_s!r} is not an integer") from None
            try:
                value = float(value_s)
            except ValueError:
                raise IngestionError(f"{path}:{line}: value {value_s!r} is not a number") from None
            if not math.isfinite(value):
                raise IngestionError(f"{path}:{line}: value {value_s!r} is not finite")
            if nonnegative and value < 0:
                raise IngestionError(f"{path}:{line}: negative value {value} for a count variable")
            key = (loc, scen, year)
            if key in values:
                raise IngestionError(
                    f"{path}:{line}: duplicate key {key} (first seen on line {first_line[key]})"
                )
            values[key] = value
            first_line[key] = line
    table = ProjectionTable(values, source=str(path))
    if not allow_sparse:
        for loc in table.locations:
            for s in table.scenarios(loc):
                ys = table.years(loc, s)
                gaps = sorted(set(range(ys[0], ys[-1] + 1)) - set(ys))
                if gaps:
                    raise IngestionError(f"{path}: series ({loc}, {s}) is missing years {gaps}")
    return table


def sample_data_path() -> Path:
    return Path(str(resources.files("climate_contingent") / "data" / SAMPLE_FILE))


def load_sample() -> ProjectionTable:
    """The bundled Northeast high-tide-flooding fixture (6 scenarios x 26 years)."""
    return ingest_csv(sample_data_path())


@dataclass(frozen=True)
class YearlySampler:
    """Per-year outcome law: pick a scenario by weight, then scale its
    projection by lognormal noise ``exp(sigma * Z)``."""

    weights: Optional[tuple[tuple[str, float], ...]] = None
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.weights is not None:
            w = tuple((str(n), float(v)) for n, v in (
                self.weights.items() if isinstance(self.weights, Mapping) else self.weights))
            object.__setattr__(self, "weights", w)
            if any(v < 0 for _, v in w) or not any(v > 0 for _, v in w):
                raise DomainError("scenario weights must be >= 0 with a positive total")
            total = math.fsum(v for _, v in w)
            if abs(total - 1.0) > 1e-9:
                raise DomainError(f"scenario weights sum to {total}, expected 1")

    def resolve(self, table: ProjectionTable, location: str) -> tuple[list[str], np.ndarray]:
        """Scenario names with positive weight and their normalized weights."""
        if self.weights is None:
            names = table.scenarios(location)
            if not names:
                raise DataCoverageError([(location, "*", "*")])
            return names, np.full(len(names), 1.0 / len(names))
        names = [n for n, v in self.weights if v > 0]
        w = np.array([v for _, v in self.weights if v > 0])
        return names, w / w.sum()


def _pick(cdf: np.ndarray, u):
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def sample_year_value(
    table: ProjectionTable,
    location: str,
    year: int,
    sampler: YearlySampler,
    rng: np.random.Generator,
) -> float:
    names, w = sampler.resolve(table, location)
    vals = table.matrix(location, names, [year])[0]
    k = int(_pick(np.cumsum(w), rng.random()))
    v = vals[k]
    if sampler.sigma > 0:
        v *= math.exp(sampler.sigma * rng.standard_normal())
    return float(v)


def pooled_distribution(
    table: ProjectionTable,
    location: str,
    years: Sequence[int],
    sampler: YearlySampler,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """``n_samples`` draws, each from a uniformly chosen year's outcome law."""
    names, w = sampler.resolve(table, location)
    vals = table.matrix(location, names, years)
    yi = rng.integers(0, len(years), n_samples)
    k = _pick(np.cumsum(w), rng.random(n_samples))
    out = vals[yi, k]
    if sampler.sigma > 0:
        out = out * np.exp(sampler.sigma * rng.standard_normal(n_samples))
    return out


def _uniforms(rng, n, stratified):
    if stratified:
        return (rng.permutation(n) + rng.random(n)) / n
    return rng.random(n)


def sample_paths(
    table: ProjectionTable,
    location: str,
    years: Sequence[int],
    sampler: YearlySampler,
    n_sims: int,
    seed: int,
    stream: int = streams.CLIMATE_FIT,
    stratified: bool = False,
    coherent: bool = False,
) -> np.ndarray:
    """Climate paths shaped (n_sims, len(years)).

    Each year draws independently from its own stream keyed by
    ``(seed, stream, year index)``. ``stratified`` spreads each year's
    uniforms one per stratum of width ``1/n_sims`` and shuffles them across
    paths (Latin hypercube over years). ``coherent`` holds one scenario per
    path for every year.
    """
    if n_sims < 1:
        raise DomainError(f"n_sims must be >= 1, got {n_sims}")
    names, w = sampler.resolve(table, location)
    vals = table.matrix(location, names, years)
    cdf = np.cumsum(w)
    out = np.empty((n_sims, len(years)))
    if coherent:
        fixed = _pick(cdf, _uniforms(streams.make_rng(seed, stream, len(years)), n_sims, stratified))
    for t in range(len(years)):
        rng = streams.make_rng(seed, stream, t)
        k = fixed if coherent else _pick(cdf, _uniforms(rng, n_sims, stratified))
        out[:, t] = vals[t, k]
        if sampler.sigma > 0:
            if stratified:
                z = ndtri(_uniforms(rng, n_sims, True))
            else:
                z = rng.standard_normal(n_sims)
            out[:, t] *= np.exp(sampler.sigma * z)
    return out


@dataclass(frozen=True)
class OutcomeBins:
    """``G - 1`` strictly increasing interior edges splitting the real line
    into half-open bins ``(-inf, e1), [e1, e2), ..., [e_{G-1}, inf)``."""

    edges: tuple[float, ...]
    floor: float = -math.inf
    jittered: bool = False
    degenerate: bool = False

    def __post_init__(self):
        e = tuple(float(x) for x in self.edges)
        object.__setattr__(self, "edges", e)
        if any(b <= a for a, b in zip(e, e[1:])):
            raise DomainError(f"bin edges must be strictly increasing, got {e}")

    @property
    def n_bins(self) -> int:
        return len(self.edges) + 1

    @property
    def labels(self) -> tuple[float, ...]:
        """Bottom value of each bin; the first bin is labelled by ``floor``."""
        return (self.floor,) + self.edges

    def index(self, values) -> np.ndarray:
        return np.searchsorted(np.asarray(self.edges), values, side="right")

    def rows(self) -> list[tuple[int, float, float, float]]:
        lo = (-math.inf,) + self.edges
        hi = self.edges + (math.inf,)
        return [(i, self.labels[i], lo[i], hi[i]) for i in range(self.n_bins)]


def bin_of(value: float, bins: OutcomeBins) -> int:
    return int(bins.index(value))


def quantile_bins(samples: Iterable[float], g: int) -> OutcomeBins:
    """Equal-mass bins with edges at the empirical ``k/g`` quantiles.

    Ties are broken by adding ``JITTER_SCALE * i / n`` to the i-th sample
    before taking quantiles, so repeated values still give distinct edges.
    A DegenerateBinsWarning is issued when the raw data had tied edges.
    """
    if g < 2:
        raise DomainError(f"granularity must be >= 2, got {g}")
    x = np.asarray(list(samples) if not isinstance(samples, np.ndarray) else samples, dtype=float)
    if x.size == 0:
        raise DomainError("quantile_bins needs at least one sample")
    q = np.arange(1, g) / g
    raw = np.quantile(x, q, method="inverted_cdf")
    degenerate = bool(np.any(np.diff(raw) <= 0))
    if degenerate:
        warnings.warn(
            f"{g} bins from {x.size} samples have tied edges; breaking ties by sample index",
            DegenerateBinsWarning, stacklevel=2,
        )
    xj = x + JITTER_SCALE * np.arange(x.size) / x.size
    edges = np.quantile(xj, q, method="inverted_cdf")
    for i in range(1, edges.size):
        if edges[i] <= edges[i - 1]:
            edges[i] = np.nextafter(edges[i - 1], math.inf)
    return OutcomeBins(tuple(edges), floor=float(x.min()), jittered=True, degenerate=degenerate)
