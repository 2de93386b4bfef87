"""Seeded, splittable random streams.

Every stochastic operation in the package takes an explicit :class:`RngStream`
instead of touching global state. A stream is a `(seed, stream_id)` pair that
keys a counter-based Philox generator, so the same pair always reproduces the
same draw sequence, on any platform, regardless of what other streams are
consumed concurrently.

Child streams are derived by hashing a label into a new ``stream_id``
(BLAKE2b, 8-byte digest), which makes the whole experiment tree reproducible
from a single root seed.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Immutable handle on a deterministic random stream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & _MASK64)

    def generator(self) -> np.random.Generator:
        """Fresh Philox generator keyed by (seed, stream_id)."""
        return np.random.Generator(
            np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        )

    def child(self, label) -> "RngStream":
        """Derive a sub-stream from a string or integer label.

        The child keeps the root seed and gets a new stream id from
        ``blake2b(stream_id || label)``, so distinct labels give independent
        streams and the derivation itself is deterministic.
        """
        h = hashlib.blake2b(digest_size=8)
        h.update(self.stream_id.to_bytes(8, "little"))
        h.update(str(label).encode("utf-8"))
        return RngStream(self.seed, int.from_bytes(h.digest(), "little"))

    def to_state(self) -> dict:
        return {"seed": self.seed, "stream_id": self.stream_id}

    @classmethod
    def from_state(cls, state: dict) -> "RngStream":
        return cls(seed=state["seed"], stream_id=state["stream_id"])
