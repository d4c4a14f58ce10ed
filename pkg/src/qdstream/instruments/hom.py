from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from qdstream.emitter.params import EmitterParams
from qdstream.emitter.stream import DEFAULT_CHUNK_PULSES, Multiplicity, PhotonStream, radiative_arrival
from qdstream.errors import GridMismatchError, InvalidArgumentError, UndefinedVisibilityError
from qdstream.instruments.histogram import CoincidenceHistogram, cross_correlate, peak_areas
from qdstream.instruments.interference import pair_visibility
from qdstream.seeding import Stream, rng_for

ZERO_DELAY_WINDOW = 1.5e-9
HOM_BIN_WIDTH = 20e-12
HOM_SIDE_PEAKS = 4


class Polarization(str, Enum):
    PARALLEL = "parallel"
    CROSS = "cross"


@dataclass(frozen=True)
class HomConfig:
    """Unbalanced Mach-Zehnder with a long arm delayed by delay_pulses periods."""

    delay_pulses: int
    splitter_ratio: float = 0.5
    polarization: Polarization = Polarization.PARALLEL

    def __post_init__(self) -> None:
        if int(self.delay_pulses) != self.delay_pulses or self.delay_pulses < 1:
            raise InvalidArgumentError(f"delay_pulses must be an integer >= 1, got {self.delay_pulses!r}")
        if not 0.0 < self.splitter_ratio < 1.0:
            raise InvalidArgumentError(f"splitter_ratio must lie in (0, 1), got {self.splitter_ratio!r}")
        object.__setattr__(self, "polarization", Polarization(self.polarization))

    def with_polarization(self, polarization: Polarization | str) -> "HomConfig":
        return HomConfig(self.delay_pulses, self.splitter_ratio, Polarization(polarization))

    def separation(self, params: EmitterParams) -> float:
        return self.delay_pulses * params.period


def delay_pulses_for(delta_t: float, params: EmitterParams) -> int:
    return max(1, int(round(delta_t * params.rep_rate)))


def _arm_probabilities(config: HomConfig, eta: float) -> Tuple[float, float]:
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise InvalidArgumentError(f"eta must lie in [0, 1], got {eta!r}")
    return eta * config.splitter_ratio, eta * (1.0 - config.splitter_ratio)


def expected_meeting_rate(params: EmitterParams, config: HomConfig, eta: float = 1.0) -> float:
    """
    Probability per output slot of a meeting: one short-arm and one long-arm photon, each
    from a single-photon pulse. Photons of two-photon pulses never take part.
    """
    q_short, q_long = _arm_probabilities(config, eta)
    return params.p1**2 * q_short * q_long


def multiphoton_background(params: EmitterParams, config: HomConfig, n_pulses: int, eta: float = 1.0) -> float:
    """
    Expected zero-delay coincidences that involve no meeting, identical for both polarizations.

    A slot holding m photons on independent 50:50 ports yields m(m-1)/4 cross-port pairs on
    average. The first and last delay_pulses slots see one arm only.
    """
    k = int(config.delay_pulses)
    n_pulses = int(n_pulses)
    if n_pulses < k + 1:
        raise InvalidArgumentError(f"{n_pulses} pulses do not cover delay_pulses + 1 = {k + 1}")
    q_short, q_long = _arm_probabilities(config, eta)
    mean_n = params.p1 + 2.0 * params.p2
    # E[S(S-1)] per arm: both photons of a pair routed the same way
    pairs_short = 2.0 * params.p2 * q_short**2
    pairs_long = 2.0 * params.p2 * q_long**2
    both_arms = pairs_short + pairs_long + 2.0 * q_short * q_long * mean_n**2
    meeting = expected_meeting_rate(params, config, eta)
    full = (n_pulses - k) * (both_arms / 4.0 - meeting / 2.0)
    edges = k * (pairs_short + pairs_long) / 4.0
    return full + edges


def _photon_draws(stream: PhotonStream, seed: int, chunk_pulses: int, t1: float) -> Tuple[np.ndarray, np.ndarray]:
    """Per-photon uniforms (arm, port, coalescence) and radiative delays, seeded by pulse chunk."""
    n = len(stream)
    u = np.empty((n, 3))
    delays = np.empty(n)
    chunk = stream.pulse_index // chunk_pulses
    cuts = np.flatnonzero(np.diff(chunk)) + 1
    for start, stop in zip(np.r_[0, cuts], np.r_[cuts, n]):
        rng = rng_for(seed, Stream.HOM, int(chunk[start]))
        u[start:stop] = rng.random((stop - start, 3))
        delays[start:stop] = rng.exponential(t1, stop - start)
    return u, delays


def _meetings(slot: np.ndarray, long_arm: np.ndarray, single: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(short, long) photon indices of slots holding one single-pulse photon from each arm."""
    order = np.argsort(slot, kind="stable")
    _, first, counts = np.unique(slot[order], return_index=True, return_counts=True)
    first = first[counts == 2]
    i0 = order[first]
    i1 = order[first + 1]
    keep = (long_arm[i0] != long_arm[i1]) & single[i0] & single[i1]
    i0, i1 = i0[keep], i1[keep]
    short = np.where(long_arm[i0], i1, i0)
    long_ = np.where(long_arm[i0], i0, i1)
    return short, long_


def hom_monte_carlo(
    stream: PhotonStream,
    config: HomConfig,
    n_pulses: int | None,
    seed: int,
    *,
    workers: int = 1,
    n_side: int = HOM_SIDE_PEAKS,
    bin_width: float = HOM_BIN_WIDTH,
    chunk_pulses: int = DEFAULT_CHUNK_PULSES,
) -> CoincidenceHistogram:
    """
    Event-driven unbalanced interferometer. Single-pulse photons sharing an output slot from
    opposite arms coalesce with probability pair_visibility * exp(-|dt_emit|/t1) (parallel) or
    never (cross). Photons of two-photon pulses are routed independently.
    Returns the histogram of D2 - D1 arrival-time differences over +/- (n_side + 1/2) periods.
    """
    params = stream.params
    n_pulses = stream.n_pulses if n_pulses is None else int(n_pulses)
    k = int(config.delay_pulses)
    if n_pulses < k + 1:
        raise InvalidArgumentError(f"stream of {n_pulses} pulses does not cover delay_pulses + 1 = {k + 1}")
    period = params.period
    half = (n_side + 0.5) * period
    meta = {
        "period": period,
        "delay_pulses": k,
        "polarization": config.polarization.value,
        "splitter_ratio": config.splitter_ratio,
        "n_pulses": n_pulses,
        "seed": int(seed),
        "n_meetings": 0,
        "n_coalesced": 0,
    }
    if len(stream) == 0:
        return CoincidenceHistogram.empty(bin_width, -half, half, flags=("empty_stream",), meta=meta)

    u, delays = _photon_draws(stream, seed, chunk_pulses, params.t1)
    long_arm = u[:, 0] >= config.splitter_ratio
    slot = stream.pulse_index + k * long_arm.astype(np.int64)
    offset = stream.emission_offset
    port = (u[:, 1] >= 0.5).astype(np.int8)

    short, long_ = _meetings(slot, long_arm, stream.multiplicity == Multiplicity.SINGLE)
    n_coalesced = 0
    if config.polarization is Polarization.PARALLEL and len(short):
        overlap = pair_visibility(params.t1, params.t2_hom, stream.omega[short] - stream.omega[long_])
        overlap = overlap * np.exp(-np.abs(offset[short] - offset[long_]) / params.t1)
        coalesce = u[short, 2] < overlap
        # coalesced photons leave through the short-arm photon's port
        port[long_[coalesce]] = port[short[coalesce]]
        n_coalesced = int(coalesce.sum())

    arrival = radiative_arrival(stream, delays) + k * period * long_arm
    t_d1 = np.sort(arrival[port == 0])
    t_d2 = np.sort(arrival[port == 1])
    h = CoincidenceHistogram.empty(bin_width, -half, half)
    counts = cross_correlate(t_d1, t_d2, h.bin_width, h.t_min, h.t_max, workers=workers)
    meta.update(n_meetings=int(len(short)), n_coalesced=n_coalesced)
    return CoincidenceHistogram(
        bin_width=h.bin_width,
        t_min=h.t_min,
        t_max=h.t_max,
        counts=counts,
        n_events_processed=len(stream),
        meta=meta,
    )


def extract_visibility(
    h_parallel: CoincidenceHistogram,
    h_cross: CoincidenceHistogram,
    window: float = ZERO_DELAY_WINDOW,
    background: float = 0.0,
) -> Tuple[float, float]:
    """
    V = 1 - (A_par(0) - B)/(A_cross(0) - B) with Poisson errors (one-count floor on A_par).
    B is the multiphoton zero-delay background common to both histograms; B = 0 gives the raw
    visibility.
    """
    if not h_parallel.same_binning(h_cross):
        raise GridMismatchError("parallel and cross histograms must share binning")
    if not (math.isfinite(background) and background >= 0.0):
        raise InvalidArgumentError(f"background must be finite and >= 0, got {background!r}")
    a_par = h_parallel.area(-window, window)
    a_cross = h_cross.area(-window, window)
    signal = a_cross - background
    if signal <= 0:
        raise UndefinedVisibilityError("no zero-delay coincidences above background in the cross-polarized histogram")
    ratio = (a_par - background) / signal
    err = math.sqrt(max(a_par, 1) / signal**2 + ratio**2 * a_cross / signal**2)
    return 1.0 - ratio, err


def side_peak_visibility(
    h_parallel: CoincidenceHistogram,
    h_cross: CoincidenceHistogram,
    window: float = ZERO_DELAY_WINDOW,
) -> Tuple[float, float]:
    """Diagnostic: each zero-delay area normalized by its own uncorrelated side peaks."""
    if not h_parallel.same_binning(h_cross):
        raise GridMismatchError("parallel and cross histograms must share binning")
    period = float(h_parallel.meta["period"])
    k = int(h_parallel.meta.get("delay_pulses", 0))

    def ratio(h: CoincidenceHistogram) -> Tuple[float, float]:
        central, side = peak_areas(h, period, None, window)
        far = [a for j, a in side.items() if abs(j) != k]
        total = float(sum(far))
        if not far or total == 0:
            raise UndefinedVisibilityError("no uncorrelated side-peak counts")
        r = central * len(far) / total
        return r, r * math.sqrt(1.0 / max(central, 1) + 1.0 / total)

    r_par, e_par = ratio(h_parallel)
    r_cross, e_cross = ratio(h_cross)
    if r_cross == 0:
        raise UndefinedVisibilityError("no zero-delay coincidences in the cross-polarized histogram")
    q = r_par / r_cross
    return 1.0 - q, q * math.sqrt((e_par / max(r_par, 1e-300)) ** 2 + (e_cross / r_cross) ** 2)
