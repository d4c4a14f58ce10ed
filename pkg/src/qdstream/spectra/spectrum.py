from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from qdstream.emitter.params import EmitterParams
from qdstream.errors import GridMismatchError, InvalidArgumentError
from qdstream.seeding import Stream, rng_for
from qdstream.spectra.profiles import FWHM_PER_SIGMA, numeric_fwhm, olivero_fwhm, uniform_step, voigt

DEFAULT_STEP = 10e6
DEFAULT_HALF_SPAN = 25e9
# minimum grid span in units of the line's total FWHM
MIN_SPAN_FWHM = 20.0


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Area-normalized intensity (1/Hz) on a uniform ascending frequency grid (Hz)."""

    nu_grid: np.ndarray
    intensity: np.ndarray
    grid_step: float
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.nu_grid.shape != self.intensity.shape:
            raise InvalidArgumentError("nu_grid and intensity must have equal length")
        step = uniform_step(self.nu_grid)
        if step is None or not math.isclose(step, self.grid_step, rel_tol=1e-9):
            raise GridMismatchError("spectrum grid is not uniform at the stated step")

    @classmethod
    def from_values(cls, nu: np.ndarray, values: np.ndarray, meta: Dict[str, Any] | None = None) -> "Spectrum":
        nu = np.asarray(nu, dtype=float)
        step = uniform_step(nu)
        if step is None:
            raise GridMismatchError("frequency grid must be uniform and ascending")
        values = np.clip(np.asarray(values, dtype=float), 0.0, None)
        area = trapezoid(values, nu)
        if not area > 0:
            raise InvalidArgumentError("spectrum has no positive area")
        return cls(nu_grid=nu, intensity=values / area, grid_step=step, meta=dict(meta or {}))

    @property
    def span(self) -> float:
        return float(self.nu_grid[-1] - self.nu_grid[0])

    def area(self) -> float:
        return float(trapezoid(self.intensity, self.nu_grid))

    def fwhm(self) -> float:
        return numeric_fwhm(self.nu_grid, self.intensity)

    def same_grid(self, other: "Spectrum") -> bool:
        return (
            len(self.nu_grid) == len(other.nu_grid)
            and math.isclose(self.grid_step, other.grid_step, rel_tol=1e-9)
            and abs(self.nu_grid[0] - other.nu_grid[0]) <= 1e-6 * self.grid_step
        )

    def with_meta(self, **meta: Any) -> "Spectrum":
        return replace(self, meta={**self.meta, **meta})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"nu_GHz": self.nu_grid * 1e-9, "intensity_per_GHz": self.intensity * 1e9})

    @classmethod
    def from_frame(cls, df: pd.DataFrame, meta: Dict[str, Any] | None = None) -> "Spectrum":
        missing = {"nu_GHz", "intensity_per_GHz"} - set(df.columns)
        if missing:
            raise InvalidArgumentError(f"spectrum table lacks columns {sorted(missing)}")
        return cls.from_values(df["nu_GHz"].to_numpy(float) * 1e9, df["intensity_per_GHz"].to_numpy(float) * 1e-9, meta)


def make_grid(step: float = DEFAULT_STEP, half_span: float = DEFAULT_HALF_SPAN) -> np.ndarray:
    """Odd-length grid symmetric about zero."""
    if not (step > 0 and half_span >= step):
        raise InvalidArgumentError(f"invalid grid step/span {step!r}/{half_span!r}")
    n = int(round(half_span / step))
    return step * np.arange(-n, n + 1, dtype=float)


def emitter_linewidths(params: EmitterParams) -> Tuple[float, float]:
    """(Lorentzian, Gaussian) FWHM in Hz of the time-averaged emission spectrum."""
    fwhm_l = 1.0 / (math.pi * params.t2_hom)
    fwhm_g = params.sigma_omega / (2.0 * math.pi) * FWHM_PER_SIGMA
    return fwhm_l, fwhm_g


def emitter_spectrum(params: EmitterParams, grid: np.ndarray | None = None) -> Spectrum:
    nu = make_grid() if grid is None else np.asarray(grid, dtype=float)
    fwhm_l, fwhm_g = emitter_linewidths(params)
    total = olivero_fwhm(fwhm_l, fwhm_g)
    if nu[-1] - nu[0] < MIN_SPAN_FWHM * total:
        raise InvalidArgumentError(
            f"grid span {nu[-1] - nu[0]:.3g} Hz is below {MIN_SPAN_FWHM:g} x line FWHM {total:.3g} Hz"
        )
    return Spectrum.from_values(nu, voigt(nu, fwhm_l, fwhm_g), meta={"fwhm_l": fwhm_l, "fwhm_g": fwhm_g})


def add_noise(spectrum: Spectrum, rel_sigma: float, seed: int) -> Tuple[np.ndarray, float]:
    """Noisy copy of the intensity values, Gaussian with std rel_sigma * peak; returns (values, std)."""
    if rel_sigma < 0:
        raise InvalidArgumentError(f"rel_sigma must be >= 0, got {rel_sigma!r}")
    sigma = float(rel_sigma * spectrum.intensity.max())
    rng = rng_for(seed, Stream.SPECTRUM_NOISE)
    return spectrum.intensity + sigma * rng.standard_normal(len(spectrum.intensity)), sigma
