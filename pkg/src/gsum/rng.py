"""Deterministic, splittable random source.

Counter-based generator (Philox) keyed by (seed, stream_id): identical keys
reproduce identical sequences on every platform, distinct stream ids give
statistically independent streams.  Monte Carlo work shards by deriving one
stream per shard and reducing in a fixed order, so results do not depend on
the number of workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RandomSource:
    """Address of a reproducible random stream.

    seed       identifies the experiment,
    stream_id  identifies the independent substream,
    counter    block offset inside the stream (advance for chunked draws).
    """

    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id", "counter"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer")

    def generator(self) -> np.random.Generator:
        """Fresh numpy Generator positioned at this (seed, stream, counter)."""
        bitgen = np.random.Philox(
            key=np.array([self.seed & MASK64, self.stream_id & MASK64], dtype=np.uint64)
        )
        if self.counter:
            bitgen.advance(int(self.counter))
        return np.random.Generator(bitgen)

    def stream(self, offset: int) -> "RandomSource":
        """Derived independent stream (same seed, shifted stream id)."""
        return RandomSource(self.seed, (self.stream_id + offset) & MASK64, 0)

    def split(self, n: int) -> list:
        """n derived independent streams, for per-shard use."""
        return [self.stream(i + 1) for i in range(n)]


def normals(rng: RandomSource, n: int) -> np.ndarray:
    """n i.i.d. N(0,1) variates as an array, deterministic in rng."""
    return rng.generator().standard_normal(int(n))


def gaussian_stream(rng: RandomSource, block: int = 8192):
    """Infinite iterator of i.i.d. N(0,1) reals, deterministic in rng."""
    gen = rng.generator()
    while True:
        for value in gen.standard_normal(block):
            yield float(value)
