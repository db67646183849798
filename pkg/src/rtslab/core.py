"""Bitstring genomes, fitness functions, distances, mutation and the seeded
random source used by every other module."""

from __future__ import annotations

import enum

import numpy as np

from . import _kernels as K

_U64 = (1 << 64) - 1


class FitnessKind(enum.IntEnum):
    TWOMAX = K.TWOMAX
    ONEMAX = K.ONEMAX
    ZEROMAX = K.ZEROMAX


class DistanceKind(enum.IntEnum):
    GENOTYPIC = K.GENOTYPIC
    PHENOTYPIC = K.PHENOTYPIC


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & _U64
    return state, mix64(state)


def mix64(z: int) -> int:
    """The splitmix64 finalizer, a bijection on 64-bit integers."""
    z &= _U64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
    return z ^ (z >> 31)


class RandomSource:
    """Seeded xoshiro256** generator.

    The state lives in a small uint64 array so the compiled engine loop can
    advance the very same stream. Identical seeds give identical streams.
    A source has a single owner; do not share one between concurrent runs.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed <= _U64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        words = []
        sm = seed
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self.state = np.array(words, dtype=np.uint64)

    def next_u64(self) -> int:
        return int(K.rng_next(self.state))

    def below(self, k: int) -> int:
        """Uniform integer in ``[0, k)``."""
        if k < 1:
            raise ValueError("k must be positive")
        return int(K.rng_below(self.state, k))

    def random(self) -> float:
        """Uniform float in ``[0, 1)`` with 53 random bits."""
        return float(K.rng_random(self.state))

    def bernoulli(self, p: float) -> bool:
        return self.random() < p

    def bit(self) -> int:
        return self.next_u64() >> 63

    def clone(self) -> "RandomSource":
        other = RandomSource.__new__(RandomSource)
        other.seed = self.seed
        other.state = self.state.copy()
        return other


class Genome:
    """Immutable bitstring of length ``n`` stored as packed 64-bit words."""

    __slots__ = ("n", "_words")

    def __init__(self, words, n: int):
        if n < 1:
            raise ValueError("genome length must be positive")
        arr = np.array(words, dtype=np.uint64).reshape(-1)
        if arr.shape[0] != K.n_words(n):
            raise ValueError(f"{arr.shape[0]} words cannot hold a genome of length {n}")
        r = n & 63
        if r and int(arr[-1]) >> r:
            raise ValueError("bits set beyond the genome length")
        arr.flags.writeable = False
        self.n = n
        self._words = arr

    @classmethod
    def from_int(cls, value: int, n: int) -> "Genome":
        if value < 0 or value >> n:
            raise ValueError(f"{value} does not fit in {n} bits")
        words = [(value >> (64 * i)) & _U64 for i in range(K.n_words(n))]
        return cls(words, n)

    @classmethod
    def from_bits(cls, bits) -> "Genome":
        bits = [int(b) for b in bits]
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        return cls.from_int(sum(b << i for i, b in enumerate(bits)), len(bits))

    @classmethod
    def from_string(cls, text: str) -> "Genome":
        """``"0110"`` sets bits 1 and 2 (character ``i`` is bit ``i``)."""
        return cls.from_bits(text)

    @classmethod
    def zeros(cls, n: int) -> "Genome":
        return cls.from_int(0, n)

    @classmethod
    def ones(cls, n: int) -> "Genome":
        return cls.from_int((1 << n) - 1, n)

    @property
    def words(self) -> np.ndarray:
        return self._words

    @property
    def bits(self) -> tuple[int, ...]:
        v = self.to_int()
        return tuple((v >> i) & 1 for i in range(self.n))

    def to_int(self) -> int:
        return sum(int(w) << (64 * i) for i, w in enumerate(self._words))

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Genome):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._words, other._words)

    def __hash__(self):
        return hash((self.n, self._words.tobytes()))

    def __str__(self):
        return "".join(map(str, self.bits))

    def __repr__(self):
        return f"Genome('{self}')" if self.n <= 64 else f"Genome(n={self.n}, ones={ones(self)})"


def ones(g: Genome) -> int:
    return int(K.popcount_row(g.words))


def evaluate(kind: FitnessKind, g: Genome) -> int:
    return int(K.fitness_of(int(kind), ones(g), g.n))


def distance(kind: DistanceKind, x: Genome, y: Genome) -> int:
    if x.n != y.n:
        raise ValueError(f"genome lengths differ: {x.n} != {y.n}")
    if kind == DistanceKind.GENOTYPIC:
        return int(K.hamming_rows(x.words, y.words))
    return abs(ones(x) - ones(y))


def mutate(g: Genome, rng: RandomSource) -> Genome:
    """Flip every bit of ``g`` independently with probability 1/n."""
    out = np.empty_like(g.words)
    K.mutate_row(g.words, ones(g), g.n, rng.state, out)
    return Genome(out, g.n)


def random_genome(n: int, rng: RandomSource) -> Genome:
    if n < 1:
        raise ValueError("genome length must be positive")
    out = np.empty(K.n_words(n), dtype=np.uint64)
    K.random_row(n, rng.state, out)
    return Genome(out, n)
