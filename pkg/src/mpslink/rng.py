"""Deterministic, platform-independent random substreams.

Every draw is keyed by the root seed plus a tuple of integers/strings
naming the consumer (side, cycle, purpose).  Identical keys therefore
yield identical values in any run, on any platform, and independent of
how many other draws happened before, which is what lets two simulation
modes be compared on paired seeds.
"""

from __future__ import annotations

import hashlib

_SCALE = float(2**53)


def _digest(seed: int, key: tuple) -> bytes:
    text = ":".join([str(seed), *map(str, key)])
    return hashlib.sha256(text.encode("ascii")).digest()


def u01(seed: int, *key) -> float:
    """Uniform value in [0, 1) determined entirely by (seed, *key)."""
    value = int.from_bytes(_digest(seed, key)[:8], "big") >> 11
    return value / _SCALE


def derive_seed(seed: int, *key) -> int:
    """Stable child seed for an independent named substream."""
    return int.from_bytes(_digest(seed, key)[8:16], "big")
