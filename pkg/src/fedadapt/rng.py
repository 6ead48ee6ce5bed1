"""Named random sub-streams derived from one root seed.

Every source of randomness in the package draws from a stream obtained via
``substream(root, name, *indices)`` so that each experiment is reproducible
from a single seed and streams stay independent of execution order.
"""

from __future__ import annotations

import zlib

import numpy as np

_STREAMS = ("data", "split", "negatives", "sampling", "dp", "init", "eval", "corpus")


def substream(root_seed: int, name: str, *indices: int) -> np.random.Generator:
    """Generator for a named sub-stream, keyed by (root seed, name, indices)."""
    tag = zlib.crc32(name.encode("utf-8"))
    seq = np.random.SeedSequence([int(root_seed) & 0xFFFFFFFF, tag, *[int(i) & 0xFFFFFFFF for i in indices]])
    return np.random.default_rng(seq)
