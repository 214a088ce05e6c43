"""Splittable, reproducible random streams.

Every stochastic operation in the package receives an explicit RngState.
A state is identified by a 64-bit seed plus a 64-bit stream counter, and
child streams are derived with a SplitMix64-style hash of
(parent seed, parent stream, index), so any node in the experiment tree
can be reconstructed without drawing from its parent. Draws themselves
come from numpy's PCG64 seeded with the mixed state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    """SplitMix64 finalizer: a bijective 64-bit avalanche hash."""
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _label_hash(label: str) -> int:
    """Stable 64-bit hash of a text label (order-independent seeding)."""
    h = 0xCBF29CE484222325  # FNV-1a offset basis
    for byte in label.encode("utf-8"):
        h = ((h ^ byte) * 0x100000001B3) & _MASK64
    return h


@dataclass(frozen=True)
class RngState:
    """Immutable handle for a reproducible random stream.

    Identical (seed, stream) pairs always produce identical sequences.
    ``split(i)`` children are reproducible from the parent state and the
    index alone.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream", int(self.stream) & _MASK64)

    def split(self, index: int) -> "RngState":
        """Derive the index-th statistically independent child stream."""
        child = _mix(self.seed ^ _mix(self.stream ^ _mix(int(index) & _MASK64)))
        return RngState(child, 0)

    def split_label(self, label: str) -> "RngState":
        """Derive a child stream keyed by a text label.

        Used where the set of children is named rather than numbered
        (generator ids, decoder ids), so permuting a config list never
        changes the stream a unit receives.
        """
        return self.split(_label_hash(label))

    def generator(self) -> np.random.Generator:
        """Fresh numpy Generator positioned at the start of this stream."""
        return np.random.Generator(np.random.PCG64(_mix(self.seed ^ _mix(self.stream))))
