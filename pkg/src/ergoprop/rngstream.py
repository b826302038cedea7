"""Counter-based random streams.

Streams are keyed by (master seed, stream id) through the Philox generator,
so stream (m, i) never collides with (m, j) and any stream can be opened
without generating its predecessors.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def rng_stream(master_seed: int, stream_id: int) -> np.random.Generator:
    key = np.array([master_seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seeds(master_seed: int, count: int, tag: int = 0x5EED) -> np.ndarray:
    """Deterministic batch of 63-bit realization seeds."""
    rng = rng_stream(master_seed, tag)
    return rng.integers(0, 1 << 63, size=count, dtype=np.uint64)
