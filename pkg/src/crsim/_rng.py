"""Counter-based seeding: every (master seed, key path) maps to its own stream."""
from __future__ import annotations

import numpy as np

# Top-level stream namespaces.
CHANNEL_STREAM = 0
TRIAL_STREAM = 1
BATCH_STREAM = 2


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for ``seed`` spawned along ``keys``.

    Trial ``i`` of an experiment uses ``derive_rng(seed, TRIAL_STREAM, i)`` so
    results do not depend on the order (or process) in which trials run.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(keys)))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
