"""Seed plumbing shared by every sampler in the package.

All randomness goes through ``Philox`` (a counter-based generator) so that a
seed fixes the stream on every platform numpy supports.
"""
from __future__ import annotations

import zlib

import numpy as np


def make_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


def box_muller(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normals from uniform pairs; avoids version-dependent ziggurat tables."""
    m = (size + 1) // 2
    u1 = 1.0 - rng.random(m)  # (0, 1]
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:size]


def _tag_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    return zlib.crc32(str(tag).encode("utf8"))


def derive_seed(master: int, *tags) -> int:
    """Deterministic 32-bit child seed for ``(master, *tags)``."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(_tag_int(t) for t in tags))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
