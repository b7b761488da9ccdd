"""
Portable seeded randomness for the channel simulator.

Everything here is integer arithmetic modulo 2**64 so that a given seed
produces the same stream in any language that implements splitmix64.
"""

from __future__ import annotations

MASK64 = (1 << 64) - 1

_GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """splitmix64 generator with 64-bit state."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        """Advance the state and return the next 64-bit output."""
        self.state = (self.state + _GOLDEN_GAMMA) & MASK64
        x = self.state
        x ^= x >> 30
        x = (x * _MIX1) & MASK64
        x ^= x >> 27
        x = (x * _MIX2) & MASK64
        x ^= x >> 31
        return x

    def below(self, bound: int) -> int:
        """Return next() mod bound (modulo bias accepted)."""
        if bound <= 0:
            raise ValueError(f"bound must be positive, got {bound}")
        return self.next() % bound


def partial_shuffle(rng: SplitMix64, n: int, k: int) -> list[int]:
    """Run k steps of Fisher–Yates over range(n) and return the first k entries, sorted."""
    if k < 0 or k > n:
        raise ValueError(f"k must be in [0, {n}], got {k}")
    items = list(range(n))
    for i in range(k):
        j = i + rng.below(n - i)
        items[i], items[j] = items[j], items[i]
    return sorted(items[:k])


def hash64(value: int) -> int:
    """One splitmix64 output for a single 64-bit input."""
    return SplitMix64(value).next()


def hash_text(text: str) -> int:
    """Fold a string into a 64-bit hash by chaining splitmix64 over its UTF-8 bytes."""
    h = 0
    for byte in text.encode("utf-8"):
        h = hash64(h ^ byte)
    return hash64(h ^ len(text))


def mix_seed(base: int, *parts: int) -> int:
    """Derive a child seed from a base seed and a tuple of small integers."""
    s = base & MASK64
    for part in parts:
        s = hash64(s ^ (part & MASK64))
    return s
