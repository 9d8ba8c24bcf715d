"""Seeded random streams.

Every stream is a Philox-4x64 counter-based generator keyed through
``numpy.random.SeedSequence``, so a tuple of non-negative integers such as
``(seed, i, j)`` maps to the same bit stream on every platform.
"""

from __future__ import annotations

import zlib

import numpy as np

from .errors import ConfigurationError


def _check(parts):
    out = []
    for p in parts:
        p = int(p)
        if p < 0:
            raise ConfigurationError(f"seed components must be non-negative, got {p}")
        out.append(p)
    return out


def make_rng(seed, *key) -> np.random.Generator:
    """Generator for the stream identified by ``(seed, *key)``."""
    entropy = _check((seed,) + key)
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def vector_key(x) -> int:
    """Stable 32-bit key of a float vector (CRC32 of its little-endian float64 bytes)."""
    arr = np.ascontiguousarray(np.asarray(x, dtype="<f8"))
    return zlib.crc32(arr.tobytes())
