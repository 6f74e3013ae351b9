"""Deterministic, independent random streams keyed by labels and integers.

Every stochastic component of the simulator (weight init, gate noise, batch
shuffling, data generation) draws from its own stream so that consuming
randomness in one place never shifts another.  Streams are derived from a
key tuple, e.g. ``stream("init", "dense", seed, node)``.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(*keys: str | int) -> np.random.Generator:
    """Return a generator seeded from the key tuple.

    String keys are hashed with crc32, so streams are stable across
    processes and platforms; distinct key tuples give statistically
    independent streams.
    """
    entropy = [
        zlib.crc32(k.encode()) if isinstance(k, str) else int(k) & 0xFFFFFFFF
        for k in keys
    ]
    return np.random.default_rng(np.random.SeedSequence(entropy))
