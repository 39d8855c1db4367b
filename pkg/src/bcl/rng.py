"""Counter-based random streams.

Every stream is a Philox generator keyed by the master seed. The 256-bit
counter is laid out as ``[draw, replication, stream, 0]``: the lowest word
advances with the draws, so streams for distinct ``(replication, stream)``
pairs never overlap and can be produced in any order.
"""

from __future__ import annotations

import numpy as np

_U64 = (1 << 64) - 1


def stream(seed: int, replication: int = 0, stream_id: int = 0) -> np.random.Generator:
    """Return the generator for ``(seed, replication, stream_id)``."""
    seed = int(seed)
    if seed < 0 or seed > _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    counter = np.array([0, int(replication) & _U64, int(stream_id) & _U64, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


def categorical_cdf(weights) -> np.ndarray:
    """Cumulative table whose last positive entry is pinned to exactly 1."""
    w = np.asarray(weights, dtype=float)
    cdf = np.cumsum(w)
    last = int(np.flatnonzero(w > 0)[-1])
    cdf[last:] = 1.0
    return cdf


def draw_categorical(gen: np.random.Generator, cdf: np.ndarray, size: int) -> np.ndarray:
    """Inverse-CDF draws of ``size`` category indices; zero-weight categories never occur."""
    u = gen.random(size)
    return np.searchsorted(cdf, u, side="right").astype(np.int64)
