"""Seed derivation and counter-based generators.

Every random draw in the package comes from a ``numpy.random.Generator``
backed by Philox (a counter-based bit generator) whose key is derived from a
master seed and a stream id with a SplitMix64-style mix. Two streams with
different ids never share state, so trials can be generated in any order or in
parallel and still be reproducible.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

MASK64 = (1 << 64) - 1

# Stream ids, one per purpose. Trial / coloring indices are mixed in on top.
STREAM_SPIKE = 0x5350494B
STREAM_NOISE = 0x4E4F4953
STREAM_COLORING = 0x434F4C52
STREAM_POWER = 0x504F5752
STREAM_ROUND = 0x524F554E
STREAM_NULL = 0x4E554C4C
STREAM_TRIAL = 0x54524941


def splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix64(seed: int, *stream_ids: int) -> int:
    """Derive a child 64-bit seed from ``seed`` and a path of stream ids."""
    h = splitmix64(seed & MASK64)
    for s in stream_ids:
        h = splitmix64(h ^ splitmix64(s & MASK64))
    return h


def generator(seed: int, *stream_ids: int) -> np.random.Generator:
    key = mix64(seed, *stream_ids)
    return np.random.Generator(np.random.Philox(key=key))


def stable_hash(obj) -> int:
    """64-bit hash of a JSON-serialisable object, stable across runs and platforms."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")
