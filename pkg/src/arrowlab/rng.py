"""Counter-based random streams.

Every stream is addressed by (seed, stream_id) through a Philox generator,
so draws are reproducible regardless of evaluation order and distinct
stream ids give statistically independent streams.
"""
from __future__ import annotations

import numpy as np

from .errors import DomainError

_MASK64 = (1 << 64) - 1


class RngStream:
    """Deterministic stream of uniforms and categorical draws."""

    def __init__(self, seed: int, stream_id: int):
        self.seed = seed
        self.stream_id = stream_id
        key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniform(self) -> float:
        return float(self._gen.random())

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(n)

    def integer(self, upper: int) -> int:
        """Uniform integer in [0, upper)."""
        return int(self._gen.integers(0, upper))

    def categorical(self, probs) -> int:
        """Sample an index from a probability vector by inverse CDF."""
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise DomainError("probability vector must be 1-D and nonempty")
        if np.any(p < -1e-12):
            raise DomainError("probability vector has negative entries")
        total = float(p.sum())
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"probability vector sums to {total}, not 1")
        cum = np.cumsum(p)
        idx = int(np.searchsorted(cum, self.uniform(), side="right"))
        return min(idx, p.size - 1)


def rng_stream(seed: int, stream_id: int) -> RngStream:
    return RngStream(seed, stream_id)


def child_seed(base_seed: int, index: int) -> int:
    """Derive the seed for run `index` of an ensemble rooted at `base_seed`."""
    gen = rng_stream(base_seed, index)
    return int(gen._gen.integers(0, 1 << 63))
