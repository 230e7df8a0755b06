"""Stable seed derivation, independent of PYTHONHASHSEED and process layout."""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    """64-bit seed from an ordered tuple of parts."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def rng_for(seed: int) -> random.Random:
    return random.Random(seed)


def unit_interval(*parts: object) -> float:
    """Deterministic uniform value in [0, 1) keyed by ``parts``."""
    return derive_seed(*parts) / 2.0**64
