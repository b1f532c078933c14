"""Splittable random streams.

Every block of simulated paths draws from its own Philox stream keyed by
``(seed, block_index)``, so results do not depend on how blocks are spread
over workers.
"""

import numpy as np

BLOCK_SIZE = 4096


def substream(seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


def block_layout(n: int, block_size: int = BLOCK_SIZE) -> list[tuple[int, int]]:
    """Return ``(block_index, size)`` pairs covering ``n`` paths in order."""
    if n < 1:
        raise ValueError("n must be positive")
    out = []
    start = 0
    idx = 0
    while start < n:
        size = min(block_size, n - start)
        out.append((idx, size))
        start += size
        idx += 1
    return out
