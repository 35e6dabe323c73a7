"""Deterministic random streams used everywhere randomness is needed.

All randomness in this package flows through the splitmix64 sequence: for a
64-bit seed, draw number i (0-based) is

    finalize(seed + (i + 1) * 0x9E3779B97F4A7C15)        (mod 2**64)

with the standard splitmix64 finalizer

    z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27; z *= 0x94D049BB133111EB
    z ^= z >> 31

The counter form means a stream can be generated scalar-by-scalar or in
vectorized blocks and the values are identical either way, which is what
makes run-to-run and backend-to-backend determinism cheap to guarantee.
"""

from __future__ import annotations

import numpy as np

from . import kernels

GOLDEN = 0x9E3779B97F4A7C15
MASK64 = 0xFFFFFFFFFFFFFFFF

# uniform doubles take the top 53 bits of a u64
_INV_2_53 = 1.0 / 9007199254740992.0


def splitmix64_at(seed: int, index: int) -> int:
    """Draw number `index` of the splitmix64 stream for `seed` (pure Python)."""
    z = (seed + (index + 1) * GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *indices: int) -> int:
    """Derive a child seed from a master seed and a path of indices.

    Each step takes one draw from the current seed's stream, so children
    at different indices never share a stream with each other or the parent.
    """
    seed = master & MASK64
    for idx in indices:
        seed = splitmix64_at(seed, idx)
    return seed


def splitmix64_at_counters(seed: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64_at for an arbitrary array of draw indices.

    Lets callers address a stream randomly (draw number c for any c)
    instead of walking it front to back.
    """
    z = np.uint64(seed & MASK64) + (counters.astype(np.uint64) + np.uint64(1)) * np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class Stream:
    """Sequential view over one splitmix64 stream with a moving cursor."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.cursor = 0

    def u64(self) -> int:
        v = splitmix64_at(self.seed, self.cursor)
        self.cursor += 1
        return v

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return (self.u64() >> 11) * _INV_2_53

    def randint(self, n: int) -> int:
        """One integer in [0, n)."""
        return min(int((self.u64() >> 11) * _INV_2_53 * n), n - 1)

    def u64_block(self, n: int) -> np.ndarray:
        out = kernels.splitmix64_block(self.seed, self.cursor, n)
        self.cursor += n
        return out

    def uniform_block(self, n: int) -> np.ndarray:
        """n doubles in [0, 1), identical to n scalar uniform() calls."""
        return (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def u32_block(self, n: int) -> np.ndarray:
        """n uniform 32-bit values (top halves of the u64 draws)."""
        return (self.u64_block(n) >> np.uint64(32)).astype(np.uint32)

    def choice_block(self, n: int, size: int) -> np.ndarray:
        """n independent indices in [0, size)."""
        return np.minimum(
            (self.uniform_block(n) * size).astype(np.int64), size - 1
        )

    def sample_without_replacement(self, n: int, count: int) -> list[int]:
        """First `count` entries of a Fisher-Yates shuffle of range(n)."""
        pool = list(range(n))
        out = []
        for i in range(count):
            j = i + self.randint(n - i)
            pool[i], pool[j] = pool[j], pool[i]
            out.append(pool[i])
        return out

    def permutation(self, n: int) -> list[int]:
        return self.sample_without_replacement(n, n)
