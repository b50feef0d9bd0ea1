"""Reproducible, splittable random streams on top of numpy's Philox generator."""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rng:
    """A named random stream. Identical ``(seed, stream)`` pairs give identical draws."""

    seed: int
    stream: int = 0
    algorithm: str = "philox"

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, self.stream])))

    def child(self, name: str | int) -> "Rng":
        key = f"{self.stream}/{name}".encode()
        return Rng(self.seed, zlib.crc32(key), self.algorithm)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, Rng):
        return rng.generator()
    return np.random.default_rng(rng)
