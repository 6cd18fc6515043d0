"""Counter-based random streams: one independent substream per work unit."""
from __future__ import annotations

import numpy as np

__all__ = ["substream", "as_seed"]


def as_seed(seed) -> int:
    s = int(seed)
    if not 0 <= s < 2 ** 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return s


def substream(seed, *key: int) -> np.random.Generator:
    """Philox generator for work unit ``key`` under ``seed``.

    Streams for different keys are statistically independent and do not depend
    on how work is scheduled, so parallel runs reproduce serial ones.
    """
    ss = np.random.SeedSequence(as_seed(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
