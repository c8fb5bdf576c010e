"""Seeded random streams.

One base seed per experiment, split into independent named streams (sphere
draws, environment noise, baseline draws, ...) so that algorithm comparisons
are coupled: two policies run against the same seed see the same adversary.
"""
from __future__ import annotations

import hashlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for (seed, name), stable across runs and platforms."""
    tag = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "big")
    return np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), tag)))
