from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import erfcx

from qdstream.emitter.noise import detuning_variance
from qdstream.emitter.params import EmitterParams
from qdstream.errors import InvalidArgumentError, require_finite
from qdstream.seeding import Stream, rng_for

HERMITE_NODES = 96
# relative slack on t2_hom <= 2 t1 for values derived through the rate identity
_T2_SLACK = 1e-12


def _check_times(t1: float, t2_hom: float) -> None:
    if not (t1 > 0 and t2_hom > 0):
        raise InvalidArgumentError(f"t1 and t2_hom must be > 0, got {t1!r}, {t2_hom!r}")
    if t2_hom > 2.0 * t1 * (1.0 + _T2_SLACK):
        raise InvalidArgumentError(f"t2_hom = {t2_hom!r} exceeds 2*t1 = {2.0 * t1!r}")


def pair_visibility(t1: float, t2_hom: float, delta_omega: float | np.ndarray) -> np.ndarray | float:
    """
    Mean two-photon overlap of exponentially decaying wave packets with Markovian dephasing
    and a centre-frequency difference delta_omega (rad/s).
    """
    _check_times(t1, t2_hom)
    d = np.asarray(delta_omega, dtype=float)
    v = (t2_hom / (2.0 * t1)) / (1.0 + (0.5 * d * t2_hom) ** 2)
    return float(v) if v.ndim == 0 else v


def jitter_overlap_factor(t1: float, sigma_jitter: float) -> float:
    """
    E[exp(-|dt|/t1)] for dt ~ Normal(0, 2 sigma_jitter^2).

    The stream draws each offset from a normal clipped to [0, 6] sigma. The common 3 sigma shift
    cancels in dt; the clip touches 0.27% of photons and only shortens |dt|, so the sampled
    factor exceeds this one by less than 0.0054.
    """
    sigma_jitter = require_finite("sigma_jitter", sigma_jitter)
    if sigma_jitter < 0:
        raise InvalidArgumentError(f"sigma_jitter must be >= 0, got {sigma_jitter!r}")
    return float(erfcx(sigma_jitter / t1))


def _gaussian_average(t1: float, t2_hom: float, variance: float, n_nodes: int) -> float:
    if variance <= 0.0:
        return float(pair_visibility(t1, t2_hom, 0.0))
    x, w = hermgauss(n_nodes)
    delta = math.sqrt(2.0 * variance) * x
    return float(np.sum(w * pair_visibility(t1, t2_hom, delta)) / math.sqrt(math.pi))


def visibility_vs_separation(params: EmitterParams, delta_t: float, n_nodes: int = HERMITE_NODES) -> float:
    """
    Expected HOM visibility of two photons emitted delta_t apart. delta_t = inf gives the plateau
    reached once the frequency noise has fully decorrelated.
    """
    if n_nodes < 64:
        raise InvalidArgumentError(f"n_nodes must be >= 64, got {n_nodes!r}")
    if isinstance(delta_t, float) and math.isinf(delta_t) and delta_t > 0:
        variance = 2.0 * params.sigma_omega**2
    else:
        variance = detuning_variance(delta_t, params)
    v = _gaussian_average(params.t1, params.t2_hom, variance, n_nodes)
    return v * jitter_overlap_factor(params.t1, params.sigma_jitter)


def visibility_plateau(params: EmitterParams) -> float:
    return visibility_vs_separation(params, math.inf)


def mz_fringe_contrast(params: EmitterParams, tau: float | np.ndarray) -> np.ndarray | float:
    """|g1(tau)| under quasi-static frequency noise."""
    t = np.asarray(tau, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise InvalidArgumentError("tau must be finite and >= 0")
    c = np.exp(-t / params.t2_hom) * np.exp(-0.5 * (params.sigma_omega * t) ** 2)
    return float(c) if c.ndim == 0 else c


@dataclass(frozen=True)
class FringeScan:
    tau: np.ndarray
    contrast: np.ndarray
    contrast_err: np.ndarray
    total_counts: np.ndarray


def mz_fringe_scan(
    params: EmitterParams,
    taus: np.ndarray,
    counts_per_point: float,
    seed: int,
    *,
    n_phases: int = 200,
    n_wavelengths: float = 10.0,
) -> FringeScan:
    """
    Counting-noise fringe data: at each delay the path phase is swept over n_wavelengths and
    the contrast is estimated from the first Fourier component of the detected counts.
    """
    taus = np.atleast_1d(np.asarray(taus, dtype=float))
    if counts_per_point <= 0:
        raise InvalidArgumentError(f"counts_per_point must be > 0, got {counts_per_point!r}")
    rng = rng_for(seed, Stream.FRINGE)
    phases = 2.0 * np.pi * n_wavelengths * np.arange(n_phases) / n_phases
    true = mz_fringe_contrast(params, taus)
    mean_counts = counts_per_point / n_phases * (1.0 + np.outer(true, np.cos(phases)))
    counts = rng.poisson(mean_counts)
    total = counts.sum(axis=1).astype(float)
    first = np.abs(counts @ np.exp(1j * phases))
    safe = np.maximum(total, 1.0)
    return FringeScan(
        tau=taus,
        contrast=2.0 * first / safe,
        contrast_err=np.sqrt(2.0 / safe),
        total_counts=total,
    )
