from __future__ import annotations

from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    """Independent random-number domains derived from one user seed."""

    PHOTONS = 0
    OU_BOUNDARY = 1
    LOSSES = 2
    HOM = 3
    HBT = 4
    LIFETIME = 5
    SPECTRUM_NOISE = 6
    FRINGE = 7
    STATIONARY = 8
    RABI_NOISE = 9


def seed_sequence(seed: int, stream: Stream, *key: int) -> np.random.SeedSequence:
    # entropy hashes the user seed; spawn_key separates domains and chunks
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream), *(int(k) for k in key)))


def rng_for(seed: int, stream: Stream, *key: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, stream, *key))


def chunk_bounds(n_total: int, chunk_size: int) -> list[tuple[int, int]]:
    """Fixed partition of [0, n_total) into chunk_size blocks; independent of worker count."""
    return [(start, min(start + chunk_size, n_total)) for start in range(0, n_total, chunk_size)]
