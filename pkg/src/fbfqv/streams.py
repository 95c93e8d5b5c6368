"""Deterministic splittable random streams.

All randomness flows from Philox counter-based generators keyed by
(master_seed, purpose tag, *indices).  A replicate's stream depends only on
its key, never on which worker runs it or in what order, which is what makes
experiment rows byte-identical across parallelism levels.
"""

from __future__ import annotations

import zlib

import numpy as np

from .errors import ParameterError

__all__ = ["substream", "tag_code"]


def tag_code(tag: str) -> int:
    """Stable 32-bit code for a purpose tag (CRC-32 of its UTF-8 bytes)."""
    return zlib.crc32(tag.encode("utf-8"))


def substream(master_seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Return the Generator for (master_seed, tag, *indices).

    The same key always yields the same stream; distinct keys yield
    statistically independent streams (SeedSequence spawn-key semantics).
    """
    seed = int(master_seed)
    if not (0 <= seed < 2**64):
        raise ParameterError(f"master_seed must be a 64-bit unsigned integer, got {master_seed!r}")
    key = (tag_code(tag),) + tuple(int(i) for i in indices)
    ss = np.random.SeedSequence(seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
