"""Deterministic RNG derivation from a single 64-bit run seed.

Every random sub-task derives its generator as spawn(seed, *tags); distinct
tag tuples give independent streams, so sub-tasks can run in any order
without affecting each other.
"""

from __future__ import annotations

import numpy as np

# stable tag values; never renumber, only append
TAG_INIT = 1
TAG_GENERATOR = 2
TAG_FINAL_BLUR = 3
TAG_RS_PROPOSALS = 4
TAG_THIN = 5
TAG_BOOTSTRAP = 6
TAG_OUTPUT = 7
TAG_GRADCHECK = 8


def spawn(seed, *tags) -> np.random.Generator:
    """Generator for the stream identified by (seed, tags)."""
    if isinstance(seed, np.random.Generator):
        if tags:
            raise ValueError("cannot re-key an already-built Generator")
        return seed
    key = tuple(int(t) for t in tags)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))
