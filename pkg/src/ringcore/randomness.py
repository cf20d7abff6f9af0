"""Seed derivation so every random stream flows from the single run seed."""

from __future__ import annotations

import numpy as np


def derive_seed(seed: int, *keys: int) -> int:
    """Return a 64-bit seed for the stream identified by ``keys``."""

    sequence = np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(k) for k in keys)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def rng_for(seed: int, *keys: int) -> np.random.Generator:
    """Return an independent generator for ``(seed, *keys)``."""

    return np.random.default_rng(derive_seed(seed, *keys))
