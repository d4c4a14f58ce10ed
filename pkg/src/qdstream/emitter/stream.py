from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from multiprocessing import Pool
from typing import Iterator, List, Sequence

import numpy as np

from qdstream.emitter.noise import decay_factors, ou_path, pin_path_end
from qdstream.emitter.params import EmitterParams
from qdstream.errors import InvalidArgumentError
from qdstream.seeding import Stream, chunk_bounds, rng_for

DEFAULT_CHUNK_PULSES = 65536


class Multiplicity(IntEnum):
    SINGLE = 0
    PAIR_FIRST = 1
    PAIR_SECOND = 2


@dataclass(frozen=True)
class PhotonRecord:
    pulse_index: int
    t_emit: float
    omega: float
    multiplicity_tag: Multiplicity


@dataclass(frozen=True, eq=False)
class PhotonStream:
    """
    Column store of emitted photons, ordered by pulse index (pair-first before pair-second).
    Iterating yields PhotonRecord values.
    """

    params: EmitterParams
    n_pulses: int
    pulse_index: np.ndarray
    t_emit: np.ndarray
    omega: np.ndarray
    multiplicity: np.ndarray

    def __len__(self) -> int:
        return int(self.pulse_index.size)

    def __getitem__(self, i: int) -> PhotonRecord:
        return PhotonRecord(
            pulse_index=int(self.pulse_index[i]),
            t_emit=float(self.t_emit[i]),
            omega=float(self.omega[i]),
            multiplicity_tag=Multiplicity(int(self.multiplicity[i])),
        )

    def __iter__(self) -> Iterator[PhotonRecord]:
        for i in range(len(self)):
            yield self[i]

    @property
    def emission_offset(self) -> np.ndarray:
        """t_emit relative to the photon's own pulse time."""
        return self.t_emit - self.pulse_index * self.params.period

    def select(self, mask: np.ndarray) -> "PhotonStream":
        return PhotonStream(
            params=self.params,
            n_pulses=self.n_pulses,
            pulse_index=self.pulse_index[mask],
            t_emit=self.t_emit[mask],
            omega=self.omega[mask],
            multiplicity=self.multiplicity[mask],
        )

    @classmethod
    def empty(cls, params: EmitterParams, n_pulses: int) -> "PhotonStream":
        return cls(params, n_pulses, np.empty(0, np.int64), np.empty(0), np.empty(0), np.empty(0, np.int8))

    @classmethod
    def concat(cls, params: EmitterParams, n_pulses: int, parts: Sequence["PhotonStream"]) -> "PhotonStream":
        if not parts:
            return cls.empty(params, n_pulses)
        return cls(
            params=params,
            n_pulses=n_pulses,
            pulse_index=np.concatenate([p.pulse_index for p in parts]),
            t_emit=np.concatenate([p.t_emit for p in parts]),
            omega=np.concatenate([p.omega for p in parts]),
            multiplicity=np.concatenate([p.multiplicity for p in parts]),
        )


def boundary_values(params: EmitterParams, bounds: List[tuple[int, int]], seed: int) -> np.ndarray:
    """
    OU values at every chunk start plus one past the final pulse, drawn sequentially from the
    exact transition kernel. Chunk interiors are bridged between consecutive values.
    """
    rng = rng_for(seed, Stream.OU_BOUNDARY)
    dt = params.period
    out = np.empty(len(bounds) + 1)
    out[0] = params.omega_0 + params.sigma_omega * rng.standard_normal()
    for j, (start, stop) in enumerate(bounds):
        a, b = decay_factors((stop - start) * dt, params)
        out[j + 1] = params.omega_0 + (out[j] - params.omega_0) * float(a) + float(b) * rng.standard_normal()
    return out


def _generate_chunk(args: tuple) -> PhotonStream:
    params, n_pulses, seed, chunk_index, start, stop, omega_start, omega_end = args
    rng = rng_for(seed, Stream.PHOTONS, chunk_index)
    dt = params.period
    m = stop - start

    # OU value at every pulse of the chunk, pinned to the next chunk's start value
    path = ou_path(omega_start, m, dt, params, rng)
    path = pin_path_end(path, omega_start, omega_end, dt, params)
    omega_at_pulse = np.concatenate([[omega_start], path[:-1]])

    u = rng.random(m)
    n_photons = np.where(u < params.p1, 1, np.where(u < params.p1 + params.p2, 2, 0)).astype(np.int64)
    total = int(n_photons.sum())
    if total == 0:
        return PhotonStream.empty(params, n_pulses)

    local = np.repeat(np.arange(m), n_photons)
    first_of_pulse = np.repeat(np.cumsum(n_photons) - n_photons, n_photons)
    position = np.arange(total) - first_of_pulse
    is_pair = np.repeat(n_photons == 2, n_photons)
    multiplicity = np.where(is_pair, 1 + position, Multiplicity.SINGLE).astype(np.int8)

    pulse_index = (start + local).astype(np.int64)
    # centred on 3 sigma so that t_emit never precedes its pulse; see jitter_overlap_factor for the clip
    jitter = np.clip(3.0 + rng.standard_normal(total), 0.0, 6.0) * params.sigma_jitter
    t_emit = pulse_index * dt + jitter

    second = multiplicity == Multiplicity.PAIR_SECOND
    n_second = int(second.sum())
    if n_second:
        # re-excited photon follows the first after an independent radiative delay
        t_emit[second] = t_emit[np.flatnonzero(second) - 1] + rng.exponential(params.t1, n_second)

    return PhotonStream(
        params=params,
        n_pulses=n_pulses,
        pulse_index=pulse_index,
        t_emit=t_emit,
        omega=omega_at_pulse[local],
        multiplicity=multiplicity,
    )


def generate_stream(
    params: EmitterParams,
    n_pulses: int,
    seed: int,
    *,
    workers: int = 1,
    chunk_pulses: int = DEFAULT_CHUNK_PULSES,
) -> PhotonStream:
    """
    Photons emitted by n_pulses excitation pulses, before any loss.

    Pulses are partitioned into fixed chunks seeded by (seed, chunk index), so the result is
    bit-identical for every worker count.
    """
    if int(n_pulses) < 1:
        raise InvalidArgumentError(f"n_pulses must be >= 1, got {n_pulses!r}")
    if params.p1 + params.p2 > 1.0:
        raise InvalidArgumentError(f"p1 + p2 = {params.p1 + params.p2} exceeds 1")
    n_pulses = int(n_pulses)

    bounds = chunk_bounds(n_pulses, int(chunk_pulses))
    boundaries = boundary_values(params, bounds, seed)
    tasks = [
        (params, n_pulses, seed, j, start, stop, boundaries[j], boundaries[j + 1])
        for j, (start, stop) in enumerate(bounds)
    ]
    if workers > 1 and len(tasks) > 1:
        with Pool(min(int(workers), len(tasks))) as pool:
            parts = pool.map(_generate_chunk, tasks)
    else:
        parts = [_generate_chunk(t) for t in tasks]
    return PhotonStream.concat(params, n_pulses, parts)


def apply_losses(stream: PhotonStream, eta: float, seed: int) -> PhotonStream:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgumentError(f"eta must lie in [0, 1], got {eta!r}")
    rng = rng_for(seed, Stream.LOSSES)
    keep = rng.random(len(stream)) < eta
    return stream.select(keep)


def radiative_arrival(stream: PhotonStream, delays: np.ndarray) -> np.ndarray:
    """
    Detection-plane arrival times given one radiative delay draw per photon.

    The second photon of a pair is re-excited once the first has decayed, so it reuses its
    partner's delay on top of its own re-emission gap already held in t_emit. A second photon
    whose partner was lost keeps its own draw.
    """
    delays = np.array(delays, dtype=float, copy=True)
    if len(stream) > 1:
        idx = np.flatnonzero(stream.multiplicity[1:] == Multiplicity.PAIR_SECOND) + 1
        partnered = (stream.multiplicity[idx - 1] == Multiplicity.PAIR_FIRST) & (
            stream.pulse_index[idx - 1] == stream.pulse_index[idx]
        )
        idx = idx[partnered]
        delays[idx] = delays[idx - 1]
    return stream.t_emit + delays
