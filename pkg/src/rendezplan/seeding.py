"""Deterministic RNG substream derivation.

Every stochastic component draws from its own named substream so that runs
are reproducible end to end from a single master seed and components cannot
perturb each other's draw sequences.
"""

from __future__ import annotations

import numpy as np

# Stable component tags.  Changing these renumbers every derived stream.
TAG_MAP = 0
TAG_CURRENT = 1
TAG_OBSTACLES = 2
TAG_OPTIMIZER = 3
TAG_MISSION = 4
TAG_SCENARIO = 5


def substream(seed: int, *tags: int) -> np.random.Generator:
    """Return a Generator for the (seed, tags...) substream.

    The same (seed, tags) pair always yields an identical stream, and
    distinct tag tuples yield statistically independent streams.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(t) for t in tags))
    return np.random.default_rng(ss)
