"""Deterministic seed derivation.

Every random stream in the package is addressed by a master seed plus a
tuple of integer keys, so any component (one source's tie-breaking, one
resample, one trial) can be regenerated in isolation.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1


def rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for the stream ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def child_seed(seed: int, *keys: int) -> int:
    """A 64-bit integer seed for the stream ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
