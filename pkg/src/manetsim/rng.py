"""Seeded, portable pseudo-random streams.

Every stream is an independent xorshift128+ generator whose state is
derived from a 64-bit run seed and a string stream label via SplitMix64.
The algorithms are fixed here, not delegated to the platform, so that a
(seed, stream_id) pair produces the identical value sequence on every
interpreter and OS.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1

# FNV-1a 64-bit parameters
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a_64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step. Returns (output, next_state)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64, state


class RngStream:
    """xorshift128+ stream, seeded by SplitMix64 over (seed, stream_id)."""

    __slots__ = ("seed", "stream_id", "_s0", "_s1")

    def __init__(self, seed: int, stream_id: str = ""):
        self.seed = seed & _MASK64
        self.stream_id = stream_id
        mixed = self.seed ^ fnv1a_64(stream_id.encode("utf-8"))
        s0, mixed = splitmix64(mixed)
        s1, _ = splitmix64(mixed)
        if s0 == 0 and s1 == 0:
            s1 = 1  # all-zero state is a fixed point
        self._s0 = s0
        self._s1 = s1

    def next_u64(self) -> int:
        x = self._s0
        y = self._s1
        self._s0 = y
        x = (x ^ (x << 23)) & _MASK64
        x = x ^ y ^ (x >> 17) ^ (y >> 26)
        self._s1 = x
        return (x + y) & _MASK64

    def random(self) -> float:
        """Float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()

    def randrange(self, n: int) -> int:
        """Integer in [0, n) without modulo bias (rejection sampling)."""
        if n <= 0:
            raise ValueError("randrange() arg must be positive")
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def randint(self, lo: int, hi: int) -> int:
        """Integer in [lo, hi] inclusive."""
        return lo + self.randrange(hi - lo + 1)
