"""Deterministic random streams built on the counter-based Philox generator.

A stream is identified by ``(seed, stream)``.  Two streams with distinct
identifiers are statistically independent (distinct Philox keys), so
replications can be run in any order or split across processes without
changing results.
"""

from __future__ import annotations

import numpy as np


class RngStream:
    """A named Philox-4x64 stream.

    The underlying generator is created lazily from the 256-bit Philox key
    ``seed * 2**64 + stream``; an ``RngStream`` constructed twice from the
    same identifiers yields identical draw sequences.
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0 or stream < 0:
            raise ValueError("seed and stream must be nonnegative")
        self.seed = int(seed)
        self.stream = int(stream)
        self._gen: np.random.Generator | None = None

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            key = (self.seed << 64) + self.stream
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def derive(self, offset: int) -> "RngStream":
        """A fresh, independent stream at ``stream + offset`` (not advanced)."""
        return RngStream(self.seed, self.stream + offset)

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream={self.stream})"
