"""Named, seeded random sub-streams so replays are byte-identical.

Every source of randomness in a trial (perception noise, operator noise,
start-pose sampling, bootstrap resampling) draws from its own stream, so
adding draws to one subsystem never perturbs another.
"""

from __future__ import annotations

import zlib

import numpy as np

# Stable stream labels used across the package.
PERCEPTION = "perception"
OPERATOR = "operator"
HARNESS = "harness"
BOOTSTRAP = "bootstrap"


def substream(seed: int, name: str) -> np.random.Generator:
    """Derive an independent generator for (seed, name).

    The name is folded in via CRC32 so the mapping is stable across runs,
    platforms, and Python processes (unlike hash()).
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode("utf-8"))]))
