"""Reproducible, splittable random streams.

Every stream is a Philox counter-based generator keyed by a
``SeedSequence(seed, spawn_key=path)``, so the numbers drawn depend only on
``(seed, path)`` and never on which thread or in which order they are used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = ()

    def __post_init__(self):
        for v in (self.seed, self.stream_id, *self.path):
            if not 0 <= int(v) <= _U64:
                raise ValueError(f"stream key component {v} is not a 64-bit unsigned integer")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, i: int) -> "RngStream":
        return RngStream(self.seed, self.stream_id, (*self.path, int(i)))


# Replica batches are cut into fixed-size blocks, one substream per block,
# so results do not depend on the worker count.
BLOCK_SIZE = 4096


def replica_blocks(stream: RngStream, replicas: int, block_size: int = BLOCK_SIZE):
    """Yield ``(block_stream, block_len)`` pairs covering ``replicas`` replicas."""
    if replicas < 0:
        raise ValueError("replicas must be non-negative")
    for b, start in enumerate(range(0, replicas, block_size)):
        yield stream.substream(b), min(block_size, replicas - start)
