"""Deterministic random streams, split by component name."""

import hashlib
from contextlib import contextmanager
from typing import Iterator

import numpy as np
import torch


class SeededStream:
    """
    Single-owner random stream.

    Children created with split(name) are independent of each other and of
    the parent, and depend only on (seed, path of names).
    """

    def __init__(self, seed: int, path: tuple[str, ...] = ()):
        self.seed = int(seed)
        self.path = path
        words = [self.seed & 0xFFFFFFFF, (self.seed >> 32) & 0xFFFFFFFF]
        for name in path:
            digest = hashlib.sha256(name.encode("utf-8")).digest()
            words.extend(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
        self._sequence = np.random.SeedSequence(words)
        self.generator = np.random.Generator(np.random.PCG64(self._sequence))

    def split(self, name: str) -> "SeededStream":
        """Derive an independent child stream for a named component."""
        return SeededStream(self.seed, self.path + (str(name),))

    def derived_seed(self) -> int:
        """63-bit integer seed for libraries that take a plain int (torch)."""
        return int(self._sequence.generate_state(2, dtype=np.uint32).view(np.uint64)[0] >> np.uint64(1))

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        return self.generator.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def integers(self, low: int, high: int, size=None):
        return self.generator.integers(low, high, size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)

    def torch_generator(self) -> torch.Generator:
        return torch.Generator().manual_seed(self.derived_seed())

    def __repr__(self) -> str:
        return f"SeededStream(seed={self.seed}, path={'/'.join(self.path) or '<root>'})"


def seeded_rng(seed: int) -> SeededStream:
    """Root stream for a run."""
    return SeededStream(seed)


@contextmanager
def torch_seed(stream: SeededStream) -> Iterator[None]:
    """Seed torch's global RNG from a stream without leaking state outside the block."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(stream.derived_seed())
        yield
