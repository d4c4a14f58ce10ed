from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.signal import fftconvolve

from qdstream.errors import DeconvolutionUnstableError, GridMismatchError
from qdstream.fitting.minimize import FitResult
from qdstream.fitting.models import Dataset1D, fit_exponential
from qdstream.spectra.spectrum import Spectrum

if TYPE_CHECKING:
    from qdstream.spectra.fabry_perot import FabryPerotSpec

# largest instrument correction accepted by the deconvolution
AMPLIFICATION_GUARD = 10.0
MIN_COHERENCE = 0.1
DEFAULT_TAU_STEP = 5e-12
DEFAULT_TAU_MAX = 2e-9


def convolve(a: Spectrum, b: Spectrum) -> Spectrum:
    """Linear convolution on a shared grid symmetric about zero, renormalized."""
    if not a.same_grid(b):
        raise GridMismatchError("spectra must share one frequency grid")
    nu = a.nu_grid
    if len(nu) % 2 == 0 or abs(nu[0] + nu[-1]) > 1e-6 * a.grid_step:
        raise GridMismatchError("convolution needs an odd-length grid symmetric about zero")
    out = fftconvolve(a.intensity, b.intensity, mode="same") * a.grid_step
    return Spectrum.from_values(nu, out, meta=dict(a.meta))


def default_taus() -> np.ndarray:
    return DEFAULT_TAU_STEP * np.arange(int(round(DEFAULT_TAU_MAX / DEFAULT_TAU_STEP)) + 1)


def coherence_function(spectrum: Spectrum, taus: np.ndarray | None = None) -> np.ndarray:
    """|integral S(nu) exp(-2 pi i nu tau) dnu|, normalized to 1 at tau = 0."""
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    nu = spectrum.nu_grid
    w = spectrum.intensity * spectrum.grid_step
    out = np.empty(len(taus))
    for start in range(0, len(taus), 64):
        block = taus[start : start + 64]
        out[start : start + 64] = np.abs(np.exp(-2j * np.pi * np.outer(block, nu)) @ w)
    return out / w.sum()


@dataclass(frozen=True, eq=False)
class CoherenceTrace:
    tau: np.ndarray
    measured: np.ndarray
    instrument: np.ndarray
    intrinsic: np.ndarray
    guard: np.ndarray

    def fit_window(self, min_coherence: float = MIN_COHERENCE) -> np.ndarray:
        """Leading run of delays inside the guard with intrinsic coherence >= min_coherence."""
        ok = self.guard & (self.intrinsic >= min_coherence)
        stop = int(np.argmin(ok)) if not ok.all() else len(ok)
        mask = np.zeros(len(ok), dtype=bool)
        mask[:stop] = True
        return mask


def deconvolve_coherence(
    measured: Spectrum, fp: "FabryPerotSpec | None", taus: np.ndarray | None = None
) -> CoherenceTrace:
    """Divide the measured coherence by the instrument's exp(-pi * fwhm * tau)."""
    taus = default_taus() if taus is None else np.asarray(taus, dtype=float)
    g = coherence_function(measured, taus)
    inst = np.ones(len(taus)) if fp is None else np.exp(-math.pi * fp.fwhm * taus)
    guard = inst > 1.0 / AMPLIFICATION_GUARD
    return CoherenceTrace(tau=taus, measured=g, instrument=inst, intrinsic=g / inst, guard=guard)


def fit_coherence_time(trace: CoherenceTrace, min_coherence: float = MIN_COHERENCE) -> FitResult:
    mask = trace.fit_window(min_coherence)
    if mask.sum() < 3:
        raise DeconvolutionUnstableError(
            f"only {int(mask.sum())} delays pass the x{AMPLIFICATION_GUARD:g} correction guard"
        )
    data = Dataset1D(x=trace.tau[mask], y=trace.intrinsic[mask], x_unit="s")
    return fit_exponential(data, baseline=False, weights="uniform")


def coherence_time_from_spectrum(
    measured: Spectrum, fp: "FabryPerotSpec | None", taus: np.ndarray | None = None
) -> float:
    return fit_coherence_time(deconvolve_coherence(measured, fp, taus)).value("tau")
