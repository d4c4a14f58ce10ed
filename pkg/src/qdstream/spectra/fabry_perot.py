from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from qdstream.errors import InvalidArgumentError
from qdstream.spectra.spectrum import Spectrum
from qdstream.spectra.transforms import convolve


@dataclass(frozen=True)
class FabryPerotSpec:
    """Scanning Fabry-Perot used as spectrometer."""

    finesse: float = 170.0
    fsr: float = 37.4e9
    peak_transmission: float = 0.61

    def __post_init__(self) -> None:
        if not self.finesse > 1:
            raise InvalidArgumentError(f"finesse must be > 1, got {self.finesse!r}")
        if not self.fsr > 0:
            raise InvalidArgumentError(f"fsr must be > 0, got {self.fsr!r}")
        if not 0 < self.peak_transmission <= 1:
            raise InvalidArgumentError(f"peak_transmission must lie in (0, 1], got {self.peak_transmission!r}")

    @property
    def fwhm(self) -> float:
        return self.fsr / self.finesse


def airy_transmission(nu: float | np.ndarray, fp: FabryPerotSpec) -> np.ndarray:
    coeff = (2.0 * fp.finesse / math.pi) ** 2
    return fp.peak_transmission / (1.0 + coeff * np.sin(math.pi * np.asarray(nu, dtype=float) / fp.fsr) ** 2)


def fp_instrument_profile(fp: FabryPerotSpec, grid: np.ndarray) -> Spectrum:
    """One Airy order, zero outside +/- fsr/2, normalized to unit area."""
    nu = np.asarray(grid, dtype=float)
    t = np.where(np.abs(nu) <= 0.5 * fp.fsr, airy_transmission(nu, fp), 0.0)
    return Spectrum.from_values(nu, t, meta={"instrument_fwhm": fp.fwhm})


def intrinsic_lorentzian_width(fwhm_l_total: float, fp: FabryPerotSpec) -> float:
    """Lorentzian widths add under convolution; remove the instrument's share."""
    return max(fwhm_l_total - fp.fwhm, 0.0)


def scan_spectrum(spectrum: Spectrum, fp: FabryPerotSpec) -> Spectrum:
    """Single-order scan: the line must be narrow against the free spectral range."""
    width = spectrum.fwhm()
    if width >= fp.fsr / 10.0:
        raise InvalidArgumentError(f"line FWHM {width:.3g} Hz is not below fsr/10 = {fp.fsr / 10.0:.3g} Hz")
    measured = convolve(spectrum, fp_instrument_profile(fp, spectrum.nu_grid))
    return measured.with_meta(**spectrum.meta, instrument_fwhm=fp.fwhm, finesse=fp.finesse, fsr=fp.fsr)
