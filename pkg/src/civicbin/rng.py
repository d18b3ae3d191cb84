"""Named, versioned deterministic random source for simulation runs.

Only the two stream-stable primitives of the stdlib Mersenne Twister are
used (``random()`` and ``getrandbits()``; both are guaranteed to reproduce
the same sequence for a given seed across Python versions). Everything else
(Poisson counts, bounded ints, choices) is built on top of them here, so a
run is reproducible from (algorithm name, seed) alone.
"""

from __future__ import annotations

import math
import random
from typing import Sequence, TypeVar

T = TypeVar("T")

# Bump the suffix if any derived-draw algorithm below changes.
ALGORITHM = "mt19937-knuth/1"


def derive_stream_seed(seed: int, label: str) -> int:
    """Stable sub-seed for a named independent stream of a run.

    Hash-based so adding a stream never shifts the draws of existing ones.
    """
    import hashlib

    digest = hashlib.sha256(f"{seed}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")

# exp(-lam) stays comfortably above double underflow for chunks this size.
_POISSON_CHUNK = 500.0


class DeterministicRng:
    """Seeded generator whose full draw sequence is part of the log contract."""

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._r = random.Random(self.seed)

    def uniform(self) -> float:
        """Next float in [0, 1)."""
        return self._r.random()

    def uniform_range(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self._r.random()

    def poisson(self, mean: float) -> int:
        """Knuth product-of-uniforms Poisson draw, chunked for large means.

        Always consumes at least one uniform, even for mean 0, so callers can
        rely on the stream advancing per draw.
        """
        if mean < 0 or not math.isfinite(mean):
            raise ValueError(f"poisson mean must be finite and >= 0, got {mean!r}")
        total = 0
        while mean > _POISSON_CHUNK:
            total += self._poisson_knuth(_POISSON_CHUNK)
            mean -= _POISSON_CHUNK
        return total + self._poisson_knuth(mean)

    def _poisson_knuth(self, lam: float) -> int:
        limit = math.exp(-lam)
        k = 0
        p = 1.0
        while True:
            p *= self._r.random()
            if p <= limit:
                return k
            k += 1

    def randbelow(self, n: int) -> int:
        """Uniform int in [0, n) via rejection sampling on getrandbits."""
        if n <= 0:
            raise ValueError("n must be positive")
        bits = (n - 1).bit_length()
        if bits == 0:
            return 0
        while True:
            v = self._r.getrandbits(bits)
            if v < n:
                return v

    def choice(self, seq: Sequence[T]) -> T:
        if not seq:
            raise ValueError("cannot choose from an empty sequence")
        return seq[self.randbelow(len(seq))]
