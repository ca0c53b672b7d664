"""Named, reproducible random streams derived from one master seed."""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Generator for the stream ``name`` (optionally indexed, e.g. by replicate).

    Distinct names or indices give statistically independent streams; the
    same arguments always give the same stream.
    """
    key = (zlib.crc32(name.encode()), *(int(i) for i in index))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def child_seed(rng: np.random.Generator) -> int:
    """A 32-bit integer seed for libraries that take plain ints."""
    return int(rng.integers(0, 2**32 - 1))
