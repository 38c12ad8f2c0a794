"""Counter-based normal variates with a fixed, documented bit stream.

Stream ``(seed, s)`` is Philox-4x64 keyed by ``seed`` with the counter
starting at ``(0, 0, tag, s)``.  Each raw 64-bit word ``w`` becomes the
uniform ``((w >> 11) + 0.5) * 2**-53`` in (0, 1) and then a standard normal
through the inverse normal CDF.  No rejection is involved, so the ``k``-th
variate of a stream is the same on every platform and every numpy version
that keeps Philox.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri


def uniform_stream(seed: int, index: int, size: int, tag: int = 0) -> np.ndarray:
    bg = np.random.Philox(key=int(seed), counter=[0, 0, int(tag), int(index)])
    raw = bg.random_raw(size).astype(np.uint64)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def normal_stream(seed: int, index: int, size: int, tag: int = 0) -> np.ndarray:
    """``size`` standard normals of substream ``index``."""
    return ndtri(uniform_stream(seed, index, size, tag))


def normal_block(seed: int, start: int, count: int, size: int, tag: int = 0) -> np.ndarray:
    """Columns ``start .. start+count-1`` of per-sample substreams, shape (size, count)."""
    out = np.empty((size, count))
    for c in range(count):
        out[:, c] = normal_stream(seed, start + c, size, tag)
    return out
