"""Deterministic, replayable random streams for parallel trajectories.

Each trajectory owns one stream, addressed by (master_seed, replication
index, role).  The child seed is derived with a SplitMix64-style avalanche
so that streams are reproducible regardless of thread scheduling, and
distinct triples land on statistically independent PCG64 states.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

_MASK = (1 << 64) - 1


class StreamRole(IntEnum):
    TRAJECTORY = 0
    INDEPENDENT_COPY = 1


def splitmix64(x):
    """One SplitMix64 avalanche step on a 64-bit value."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    replication_index: int = 0
    role: StreamRole = StreamRole.TRAJECTORY

    def child_seed(self):
        s = splitmix64(self.master_seed & _MASK)
        s = splitmix64(s ^ (self.replication_index & _MASK))
        s = splitmix64(s ^ int(self.role))
        return s

    def generator(self):
        """Fresh numpy Generator positioned at the start of this stream."""
        return np.random.Generator(np.random.PCG64(self.child_seed()))
