from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from qdstream.emitter.params import EmitterParams
from qdstream.errors import InvalidArgumentError, require_finite
from qdstream.seeding import Stream, rng_for


@dataclass(frozen=True)
class OUProcessState:
    """
    Spectral-diffusion state: instantaneous angular frequency of the emitter.

    The stationary law of omega_current is Normal(omega_0, sigma_omega^2). Steps taken without
    an explicit generator draw from (rng_stream_id, n_steps), so `ou_step` is a pure function.
    """

    omega_current: float
    t_last: float = 0.0
    rng_stream_id: int = 0
    n_steps: int = 0


def decay_factors(dt: float | np.ndarray, params: EmitterParams) -> tuple[np.ndarray, np.ndarray]:
    """(e^{-dt/tau_c}, sigma_omega * sqrt(1 - e^{-2 dt/tau_c})) of the exact transition kernel."""
    a = np.exp(-np.asarray(dt, dtype=float) / params.tau_c)
    b = params.sigma_omega * np.sqrt(-np.expm1(-2.0 * np.asarray(dt, dtype=float) / params.tau_c))
    return a, b


def ou_transition(omega: float | np.ndarray, dt: float, params: EmitterParams, z: float | np.ndarray) -> np.ndarray:
    a, b = decay_factors(dt, params)
    return params.omega_0 + (np.asarray(omega, dtype=float) - params.omega_0) * a + b * np.asarray(z, dtype=float)


def ou_step(state: OUProcessState, dt: float, params: EmitterParams, rng: np.random.Generator | None = None) -> OUProcessState:
    dt = require_finite("dt", dt)
    if dt < 0:
        raise InvalidArgumentError(f"dt must be >= 0, got {dt!r}")
    if dt == 0:
        return state
    if rng is None:
        rng = rng_for(state.rng_stream_id, Stream.STATIONARY, state.n_steps)
    omega = float(ou_transition(state.omega_current, dt, params, rng.standard_normal()))
    return replace(state, omega_current=omega, t_last=state.t_last + dt, n_steps=state.n_steps + 1)


def stationary_state(params: EmitterParams, seed: int) -> OUProcessState:
    rng = rng_for(seed, Stream.STATIONARY)
    omega = params.omega_0 + params.sigma_omega * rng.standard_normal()
    return OUProcessState(omega_current=float(omega), t_last=0.0, rng_stream_id=int(seed), n_steps=0)


def ou_path(omega_start: float, n_steps: int, dt: float, params: EmitterParams, rng: np.random.Generator) -> np.ndarray:
    """Values after 1..n_steps exact steps of size dt (the start value is not included)."""
    if n_steps <= 0:
        return np.empty(0)
    a, b = decay_factors(dt, params)
    a, b = float(a), float(b)
    z = rng.standard_normal(n_steps)
    # AR(1) recursion y_n = a*y_{n-1} + b*z_n on the centred process
    y, _ = lfilter([b], [1.0, -a], z, zi=[a * (omega_start - params.omega_0)])
    return params.omega_0 + y


def pin_path_end(path: np.ndarray, omega_start: float, omega_end: float, dt: float, params: EmitterParams) -> np.ndarray:
    """
    Condition a forward path on its end value.

    `path` holds the values after steps 1..m from omega_start; the last entry is replaced by
    omega_end and every interior value is shifted by the exact Gaussian regression on it.
    """
    m = len(path)
    if m == 0:
        return path
    a = math.exp(-dt / params.tau_c)
    denom = -math.expm1(2.0 * m * math.log(a)) if a > 0 else 1.0
    if denom <= 0.0:
        return path
    i = np.arange(1, m + 1, dtype=float)
    # Cov(x_i, x_m | x_0) / Var(x_m | x_0)
    weight = (np.power(a, m - i) - np.power(a, m + i)) / denom
    return path + weight * (omega_end - path[-1])


def detuning_variance(delta_t: float, params: EmitterParams) -> float:
    delta_t = require_finite("delta_t", delta_t)
    if delta_t < 0:
        raise InvalidArgumentError(f"delta_t must be >= 0, got {delta_t!r}")
    return 2.0 * params.sigma_omega**2 * -math.expm1(-delta_t / params.tau_c)
