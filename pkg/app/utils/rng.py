"""
Deterministic pseudo-random generator shared by every seeded operation.

The generator is xoshiro256** whose 256-bit state is filled from a SplitMix64
stream, so splits, bootstraps, fold plans and synthetic samples reproduce
bit-for-bit in any language that implements the same update equations.

SplitMix64 (seeding):
    state <- state + 0x9E3779B97F4A7C15          (mod 2^64)
    z <- (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z <- (z ^ (z >> 27)) * 0x94D049BB133111EB
    out <- z ^ (z >> 31)

xoshiro256** (stream), state s0..s3 = four successive SplitMix64 outputs:
    out <- rotl(s1 * 5, 7) * 9
    t <- s1 << 17
    s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t; s3 <- rotl(s3, 45)

Derived quantities:
    uniform in [0, 1):   (out >> 11) * 2^-53
    integer in [0, n):   rejection sampling on out, then out mod n
    shuffle:             Fisher-Yates, i from n-1 down to 1, j = below(i + 1)
    standard normal:     Box-Muller cosine branch, u1 = 1 - uniform, u2 = uniform
"""
import math
from typing import List, Sequence

MASK64 = 0xFFFFFFFFFFFFFFFF
DEFAULT_SEED = 42


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class SplitMix64:
    """SplitMix64 stream, used to seed xoshiro256** and to derive child seeds"""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)


class Xoshiro256:
    """xoshiro256** generator with the sampling helpers the toolkit needs"""

    def __init__(self, seed: int = DEFAULT_SEED):
        seeder = SplitMix64(seed)
        self.s = [seeder.next_u64() for _ in range(4)]

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self.s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """Uniform float in [0, 1) with 53 random bits"""
        return (self.next_u64() >> 11) * (1.0 / 9007199254740992.0)

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n)"""
        if n <= 0:
            raise ValueError(f"below() needs a positive bound, got {n}")
        limit = (MASK64 + 1) - ((MASK64 + 1) % n)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % n

    def shuffle(self, items: List) -> List:
        """Fisher-Yates shuffle in place; returns the same list"""
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items

    def permutation(self, n: int) -> List[int]:
        return self.shuffle(list(range(n)))

    def sample(self, population: Sequence[int], k: int) -> List[int]:
        """k distinct items, via a partial Fisher-Yates pass over a copy"""
        pool = list(population)
        if k > len(pool):
            raise ValueError(f"cannot draw {k} items from {len(pool)}")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]

    def choices(self, n: int, k: int) -> List[int]:
        """k draws with replacement from range(n)"""
        return [self.below(n) for _ in range(k)]

    def normal(self) -> float:
        u1 = 1.0 - self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> List[float]:
        return [self.normal() for _ in range(n)]


def derive_seeds(seed: int, count: int) -> List[int]:
    """Independent child seeds (one per tree, fold, ...) from a parent seed"""
    seeder = SplitMix64(seed)
    return [seeder.next_u64() for _ in range(count)]
