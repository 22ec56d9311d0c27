"""SplitMix64 stream with unbiased bounded draws.

Few-shot splits must be reproducible across implementations and
languages, so sampling is pinned to a fixed, documented generator
rather than whatever a host library ships. SplitMix64 (Steele, Lea &
Flood 2014) is tiny, has published reference outputs, and needs only
64-bit integer arithmetic.

Reference outputs for seed 0:
    0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f, ...
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """Deterministic 64-bit PRNG. Seeds are taken modulo 2**64."""

    __slots__ = ("_state",)

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def bounded(self, n: int) -> int:
        """Uniform integer in [0, n) via rejection sampling (no modulo bias)."""
        if n <= 0:
            raise ValueError(f"bound must be positive, got {n}")
        threshold = ((1 << 64) - n) % n
        while True:
            r = self.next_u64()
            if r >= threshold:
                return r % n

    def choose(self, pool: list[int], k: int) -> list[int]:
        """Draw k items from pool without replacement (partial Fisher-Yates).

        The pool is copied; the draw order is part of the documented
        algorithm, so callers must pass the pool in a canonical order.
        """
        if k > len(pool):
            raise ValueError(f"cannot draw {k} items from pool of {len(pool)}")
        items = list(pool)
        for j in range(k):
            i = j + self.bounded(len(items) - j)
            items[j], items[i] = items[i], items[j]
        return items[:k]
