"""Named, counter-based random streams derived from one run seed."""

from __future__ import annotations

import zlib

import numpy as np


def make_rng(seed: int, name: str) -> np.random.Generator:
    """Philox stream for ``(seed, name)``; independent of call order."""
    if int(seed) != seed or seed < 0:
        raise ValueError("rng seed must be a nonnegative integer")
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode("utf-8"))])
    return np.random.Generator(np.random.Philox(ss))
