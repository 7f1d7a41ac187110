"""Deterministic counter-based random streams for parallel replications.

Streams are keyed by (seed, stream_id) through the Philox counter-based
generator, so replication r of an experiment draws from the same bit
sequence no matter in which order (or on how many workers) the
replications run.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class RngStream:
    """A named, order-independent random stream.

    Identical (seed, stream_id) pairs yield bit-identical sequences;
    distinct stream_ids are statistically independent.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= self.seed <= _MASK64):
            raise ValueError("seed must fit in 64 bits")
        if not (0 <= self.stream_id <= _MASK64):
            raise ValueError("stream_id must fit in 64 bits")

    def generator(self) -> np.random.Generator:
        # 128-bit Philox key: low word = seed, high word = stream_id.
        key = (self.stream_id << 64) | self.seed
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, offset: int) -> "RngStream":
        """Derive a sub-stream; used to split noise/covariate/eval draws."""
        return RngStream(self.seed, (self.stream_id * 1024 + offset) & _MASK64)
