"""Keyed random streams.

Every consumer derives its generator from ``(seed, *key)`` so runs are
reproducible and parameter sweeps share common random numbers.
"""

import numpy as np

REPLICATION = 0
BOOTSTRAP = 1
CLIMATE_POOL = 2
CLIMATE_FIT = 3
CLIMATE_EVAL = 4


def make_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))
