from __future__ import annotations

import numpy as np

from qdstream.emitter.params import EmitterParams
from qdstream.errors import InvalidArgumentError
from qdstream.instruments.histogram import CoincidenceHistogram
from qdstream.seeding import Stream, rng_for

LIFETIME_BIN_WIDTH = 4e-12
# histogram range in units of the sampled lifetime
LIFETIME_SPAN = 10.0


def rabi_rate(pump_power: float | np.ndarray, p_pi: float, r_max: float) -> np.ndarray | float:
    """Detected rate under pulsed excitation: pulse area grows with field amplitude, i.e. sqrt(power)."""
    p = np.asarray(pump_power, dtype=float)
    if np.any(~np.isfinite(p)) or np.any(p < 0):
        raise InvalidArgumentError("pump_power must be finite and >= 0")
    if not p_pi > 0:
        raise InvalidArgumentError(f"p_pi must be > 0, got {p_pi!r}")
    out = r_max * np.sin(0.5 * np.pi * np.sqrt(p / p_pi)) ** 2
    return float(out) if out.ndim == 0 else out


def purcell_lifetime(params: EmitterParams, detuned: bool = False) -> float:
    return params.purcell_ratio * params.t1 if detuned else params.t1


def sample_emission_delays(params: EmitterParams, n_events: int, detuned: bool, seed: int) -> np.ndarray:
    if int(n_events) < 1:
        raise InvalidArgumentError(f"n_events must be >= 1, got {n_events!r}")
    rng = rng_for(seed, Stream.LIFETIME, int(bool(detuned)))
    return rng.exponential(purcell_lifetime(params, detuned), int(n_events))


def lifetime_histogram(
    params: EmitterParams,
    n_events: int,
    detuned: bool,
    seed: int,
    *,
    bin_width: float = LIFETIME_BIN_WIDTH,
    t_max: float | None = None,
) -> CoincidenceHistogram:
    """Time-resolved emission counts after the excitation pulse; delays beyond t_max are dropped."""
    delays = sample_emission_delays(params, n_events, detuned, seed)
    if t_max is None:
        t_max = LIFETIME_SPAN * purcell_lifetime(params, detuned)
    return CoincidenceHistogram.from_values(
        delays,
        bin_width,
        0.0,
        t_max,
        n_events_processed=int(n_events),
        meta={"detuned": bool(detuned), "lifetime": purcell_lifetime(params, detuned)},
    )
