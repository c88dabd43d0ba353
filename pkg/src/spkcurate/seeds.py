"""Deterministic RNG sub-streams.

Every random decision in the package flows from an explicit 64-bit seed
through numpy's PCG64. Named sub-streams keep independent parts of a run
(world generation, shuffling, training, sampling) decoupled: adding draws
to one stream never shifts another.
"""

import zlib

import numpy as np


def rng_for(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """PCG64 generator for the sub-stream `label` (optionally indexed) of `seed`."""
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([seed, key, index]))
