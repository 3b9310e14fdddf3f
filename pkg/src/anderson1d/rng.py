"""Counter-based random streams for reproducible parallel Monte Carlo.

One master seed identifies a whole experiment.  Every trial draws from its
own stream, derived as ``Philox(SeedSequence(master_seed, spawn_key=(stream,)))``.
Streams are independent of the order in which they are created or consumed,
so trial-level parallelism cannot change any sampled value.
"""

from __future__ import annotations

import numpy as np


def stream_rng(master_seed: int, stream: int) -> np.random.Generator:
    """Generator for one (master_seed, stream) pair, bit-stable forever."""
    if stream < 0:
        raise ValueError(f"stream must be >= 0, got {stream}")
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def stream_rngs(master_seed: int, streams) -> list[np.random.Generator]:
    """Generators for several streams; order of the list follows `streams`."""
    return [stream_rng(master_seed, s) for s in streams]
