"""Seedable random stream used by every sampler.

The underlying generator is numpy's PCG64 (O'Neill's permuted congruential
generator, 128-bit state, 64-bit output).  Raw 64-bit words are buffered and
turned into unbiased integers below any bound (including bounds larger than
``2**64``, needed for exact rational masses) and into uniform doubles with
53 random bits.  The same seed gives the same stream on every platform.

Parallel workers get independent streams from :meth:`RngState.spawn`, which
uses :class:`numpy.random.SeedSequence` spawning.
"""
from __future__ import annotations

import math
import os

import numpy as np

_BUFFER = 256
DEFAULT_SEED = 0


def default_seed() -> int:
    """Seed from ``FRAGTREE_SEED`` if set, else :data:`DEFAULT_SEED`."""
    value = os.environ.get("FRAGTREE_SEED")
    return int(value) if value not in (None, "") else DEFAULT_SEED


class RngState:
    def __init__(self, seed: int | np.random.SeedSequence | None = None):
        if seed is None:
            seed = default_seed()
        self._seed_seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self._bitgen = np.random.PCG64(self._seed_seq)
        self._words: list[int] = []
        self._pos = 0

    @classmethod
    def from_generator(cls, gen: np.random.Generator) -> RngState:
        self = cls.__new__(cls)
        self._seed_seq = None
        self._bitgen = gen.bit_generator
        self._words = []
        self._pos = 0
        return self

    def spawn(self, k: int) -> list[RngState]:
        """``k`` independent child streams."""
        if self._seed_seq is None:
            raise ValueError("stream built from a bare Generator cannot be split")
        return [RngState(s) for s in self._seed_seq.spawn(k)]

    def word(self) -> int:
        """Next raw 64-bit word."""
        if self._pos >= len(self._words):
            self._words = self._bitgen.random_raw(_BUFFER).tolist()
            self._pos = 0
        w = self._words[self._pos]
        self._pos += 1
        return w

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection; exact for any ``n >= 1``."""
        if n <= 0:
            raise ValueError("bound must be positive")
        if n == 1:
            return 0
        bits = (n - 1).bit_length()
        while True:
            x = 0
            got = 0
            while got < bits:
                x = (x << 64) | self.word()
                got += 64
            x >>= got - bits
            if x < n:
                return x

    def random(self) -> float:
        """Uniform double in ``[0, 1)``."""
        return (self.word() >> 11) * (1.0 / 9007199254740992.0)

    def exponential(self, rate: float) -> float:
        """Exponential variate with the given rate (inverse transform)."""
        return -math.log1p(-self.random()) / rate

    def generator(self) -> np.random.Generator:
        """A numpy Generator sharing this stream's bit generator."""
        return np.random.Generator(self._bitgen)


def as_rng(rng) -> RngState:
    """Coerce a seed, Generator or :class:`RngState` into an :class:`RngState`."""
    if isinstance(rng, RngState):
        return rng
    if isinstance(rng, np.random.Generator):
        return RngState.from_generator(rng)
    return RngState(rng)
