from __future__ import annotations

import math
from typing import Tuple

import numpy as np

from qdstream.emitter.stream import DEFAULT_CHUNK_PULSES, PhotonStream, radiative_arrival
from qdstream.errors import InsufficientRangeError
from qdstream.instruments.histogram import CoincidenceHistogram, cross_correlate, peak_areas
from qdstream.instruments.hom import ZERO_DELAY_WINDOW
from qdstream.seeding import Stream, rng_for

HBT_BIN_WIDTH = 100e-12
HBT_SIDE_PEAKS = 12
MIN_SIDE_PEAKS = 10


def hbt_histogram(
    stream: PhotonStream,
    n_pulses: int | None,
    seed: int,
    *,
    workers: int = 1,
    n_side: int = HBT_SIDE_PEAKS,
    bin_width: float = HBT_BIN_WIDTH,
    chunk_pulses: int = DEFAULT_CHUNK_PULSES,
) -> CoincidenceHistogram:
    """50:50 split of the stream onto two detectors; histogram of D2 - D1 arrival differences."""
    params = stream.params
    n_pulses = stream.n_pulses if n_pulses is None else int(n_pulses)
    period = params.period
    half = (n_side + 0.5) * period
    meta = {"period": period, "n_pulses": n_pulses, "seed": int(seed)}
    if len(stream) == 0:
        return CoincidenceHistogram.empty(bin_width, -half, half, flags=("empty_stream",), meta=meta)

    n = len(stream)
    port = np.empty(n, dtype=bool)
    delays = np.empty(n)
    chunk = stream.pulse_index // chunk_pulses
    cuts = np.flatnonzero(np.diff(chunk)) + 1
    for start, stop in zip(np.r_[0, cuts], np.r_[cuts, n]):
        rng = rng_for(seed, Stream.HBT, int(chunk[start]))
        port[start:stop] = rng.random(stop - start) < 0.5
        delays[start:stop] = rng.exponential(params.t1, stop - start)

    arrival = radiative_arrival(stream, delays)
    h = CoincidenceHistogram.empty(bin_width, -half, half)
    counts = cross_correlate(np.sort(arrival[port]), np.sort(arrival[~port]), h.bin_width, h.t_min, h.t_max,
                             workers=workers)
    return CoincidenceHistogram(
        bin_width=h.bin_width,
        t_min=h.t_min,
        t_max=h.t_max,
        counts=counts,
        n_events_processed=n,
        meta=meta,
    )


def g2_zero(
    h: CoincidenceHistogram,
    period: float | None = None,
    window: float = ZERO_DELAY_WINDOW,
) -> Tuple[float, float]:
    """Central-peak area over the mean side-peak area, with Poisson errors."""
    period = float(h.meta["period"]) if period is None else period
    central, side = peak_areas(h, period, None, window)
    if len(side) < MIN_SIDE_PEAKS:
        raise InsufficientRangeError(f"{len(side)} side peaks in range; need at least {MIN_SIDE_PEAKS}")
    side_total = float(sum(side.values()))
    if side_total == 0:
        raise InsufficientRangeError("side peaks hold no counts")
    n = len(side)
    g = n * central / side_total
    err = math.sqrt((n / side_total) ** 2 * max(central, 1) + g**2 / side_total)
    return g, err
