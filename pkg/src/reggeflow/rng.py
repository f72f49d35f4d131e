"""SplitMix64: the only random source behind seeded runs.

The sequence is fully specified (Steele, Lea & Flood 2014) so a seed in a run
manifest reproduces the same starting metrics in any implementation::

    state += 0x9E3779B97F4A7C15
    z = state
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    out = z ^ (z >> 31)                       # all arithmetic mod 2**64

Floats in [0, 1) are ``(out >> 11) * 2**-53``.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def random(self, size: int | None = None):
        if size is None:
            return (self.next_u64() >> 11) * 2.0**-53
        return np.array([(self.next_u64() >> 11) * 2.0**-53 for _ in range(size)])

    def uniform(self, low: float = 0.0, high: float = 1.0, size: int | None = None):
        return low + (high - low) * self.random(size)

    def spawn(self, n: int) -> list[int]:
        """``n`` child seeds, drawn in order."""
        return [self.next_u64() for _ in range(n)]
