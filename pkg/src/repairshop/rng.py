"""Deterministic, cross-platform random number generation.

All randomness in this package flows through ``Xoshiro256``, a pure-Python
implementation of the xoshiro256** 1.0 generator (Blackman & Vigna) seeded
through a splitmix64 chain.  The algorithm is fixed here, byte for byte, so
that instances, scenarios and simulation traces are bit-reproducible across
platforms and Python versions -- unlike ``random.Random``, whose helper
methods (``randint``, ``sample``, ...) are not guaranteed stable.

A generator is identified by a 64-bit seed.  Named sub-streams are derived
with :func:`derive_seed`, which hashes the parent seed together with string
or integer labels (FNV-1a) and passes the result through splitmix64.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1


def _splitmix64(state: int) -> tuple[int, int]:
    """One step of splitmix64: returns (output, next_state)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31), state


def derive_seed(seed: int, *labels: int | str) -> int:
    """Derive a child seed from ``seed`` and a label path (FNV-1a 64)."""
    h = 0xCBF29CE484222325
    for byte in (seed & _MASK64).to_bytes(8, "little"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    for label in labels:
        data = label.encode() if isinstance(label, str) else (label & _MASK64).to_bytes(8, "little")
        for byte in data:
            h = ((h ^ byte) * 0x100000001B3) & _MASK64
    out, _ = _splitmix64(h)
    return out


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK64


class Xoshiro256:
    """xoshiro256** seeded via splitmix64; the package-wide PRNG."""

    __slots__ = ("_s0", "_s1", "_s2", "_s3", "seed")

    def __init__(self, seed: int):
        self.seed = seed & _MASK64
        state = self.seed
        outs = []
        for _ in range(4):
            out, state = _splitmix64(state)
            outs.append(out)
        if not any(outs):  # all-zero state is the one forbidden fixed point
            outs[0] = 1
        self._s0, self._s1, self._s2, self._s3 = outs

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s0, self._s1, self._s2, self._s3
        result = (_rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s0, self._s1, self._s2, self._s3 = s0, s1, s2, s3
        return result

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of precision."""
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def randint(self, low: int, high: int) -> int:
        """Uniform integer in the inclusive range [low, high]."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        span = high - low + 1
        # rejection sampling keeps the draw unbiased
        limit = (1 << 64) - ((1 << 64) % span)
        v = self.next_u64()
        while v >= limit:
            v = self.next_u64()
        return low + (v % span)

    def uniform(self, low: float, high: float) -> float:
        return low + (high - low) * self.random()

    def choice(self, seq):
        return seq[self.randint(0, len(seq) - 1)]

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(0, i)
            items[i], items[j] = items[j], items[i]

    def sample(self, seq, k: int) -> list:
        """k distinct elements, order given by a partial Fisher-Yates pass."""
        if k > len(seq):
            raise ValueError("sample larger than population")
        pool = list(seq)
        for i in range(k):
            j = self.randint(i, len(pool) - 1)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def spawn(self, *labels: int | str) -> "Xoshiro256":
        """Independent sub-stream addressed by a label path."""
        return Xoshiro256(derive_seed(self.seed, *labels))
