"""Named, reproducible random sub-streams derived from one 64-bit seed."""
from __future__ import annotations

import hashlib

import numpy as np


def _name_key(name: str) -> tuple[int, ...]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for task ``name`` (e.g. ``"chain/3"``, ``"ais/12"``) under ``seed``.

    Streams with different names are statistically independent, and a given
    (seed, name) pair always yields the same stream regardless of what other
    streams were drawn.
    """
    if not 0 <= int(seed) < 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=_name_key(name))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(seed: int | np.random.Generator | None, name: str = "default") -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return substream(0 if seed is None else int(seed), name)
