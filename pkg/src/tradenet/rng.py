"""Deterministic per-realization random streams.

Every stream is a PCG64 generator whose SeedSequence is keyed by the master
seed plus a spawn key ``(purpose, set_index, net_index)``.  Streams for
different keys are statistically independent, and any one of them can be
rebuilt without touching the others.
"""

from __future__ import annotations

import numpy as np

RNG_ALGORITHM = "numpy.PCG64+SeedSequence(entropy=master_seed, spawn_key=(purpose, set, net))"

PURPOSES = {
    "lambda": 0,
    "initial": 1,
    "qss": 2,
    "growth": 3,
    "gap": 4,
}

MAX_SEED = 2**64 - 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def child_stream(master_seed: int, purpose: str, set_index: int = 0,
                 net_index: int = 0) -> np.random.Generator:
    if not 0 <= master_seed <= MAX_SEED:
        raise ValueError(f"master seed must fit in 64 unsigned bits, got {master_seed}")
    seq = np.random.SeedSequence(
        entropy=master_seed,
        spawn_key=(PURPOSES[purpose], set_index, net_index),
    )
    return np.random.Generator(np.random.PCG64(seq))
