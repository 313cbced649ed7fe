"""Keyed random streams.

Every stochastic operation takes an :class:`RngStream`, a (seed, stream_id)
pair that deterministically names an independent random sequence.  Identical
pairs reproduce bit-identical draws; distinct stream ids on the same seed are
statistically independent, so concurrent workers can each own a stream
without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.default_rng(np.random.SeedSequence([self.seed & MASK64, self.stream_id & MASK64]))


MASK64 = (1 << 64) - 1


def pack_stream(*parts: int) -> int:
    """Pack small nonnegative ints into one collision-free 64-bit stream id.

    Each part gets 16 bits; at most four parts fit.  Harness code uses this to
    key streams by (experiment slot, sweep index, repeat index, purpose).
    """
    if len(parts) > 4:
        raise ValueError("at most four 16-bit parts fit in a stream id")
    out = 0
    for p in parts:
        if not (0 <= p < (1 << 16)):
            raise ValueError(f"stream id part {p} outside [0, 65536)")
        out = (out << 16) | p
    return out
