from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

from qdstream.errors import InsufficientRangeError, InvalidArgumentError

FWHM_PER_SIGMA = math.sqrt(8.0 * math.log(2.0))
# Voigt kernel: Gaussian nodes over +/- 6 sigma at a step of at most min(fwhm)/50
_KERNEL_SIGMAS = 6.0
_STEPS_PER_FWHM = 50.0
_MAX_REFINE = 8


def _width(name: str, value: float, allow_zero: bool = False) -> float:
    v = float(value)
    if not math.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
        raise InvalidArgumentError(f"{name} must be {'>=' if allow_zero else '>'} 0, got {value!r}")
    return v


def lorentzian(nu: float | np.ndarray, fwhm: float) -> np.ndarray:
    gamma = 0.5 * _width("fwhm", fwhm)
    nu = np.asarray(nu, dtype=float)
    return (gamma / np.pi) / (nu**2 + gamma**2)


def gaussian(nu: float | np.ndarray, fwhm: float) -> np.ndarray:
    sigma = _width("fwhm", fwhm) / FWHM_PER_SIGMA
    nu = np.asarray(nu, dtype=float)
    return np.exp(-0.5 * (nu / sigma) ** 2) / (sigma * math.sqrt(2.0 * math.pi))


def uniform_step(nu: np.ndarray, rtol: float = 1e-9) -> float | None:
    """Grid step of an ascending uniform grid, or None."""
    nu = np.asarray(nu, dtype=float)
    if nu.ndim != 1 or nu.size < 2:
        return None
    d = np.diff(nu)
    step = float(d.mean())
    if step <= 0 or np.max(np.abs(d - step)) > rtol * step + 8.0 * np.finfo(float).eps * np.max(np.abs(nu)):
        return None
    return step


def _gaussian_kernel(sigma: float, h: float) -> tuple[np.ndarray, np.ndarray]:
    n = int(math.ceil(_KERNEL_SIGMAS * sigma / h))
    x = h * np.arange(-n, n + 1)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return x, w / w.sum()


def voigt(nu: float | np.ndarray, fwhm_l: float, fwhm_g: float) -> np.ndarray:
    """
    Lorentzian convolved with a Gaussian, by quadrature of the Gaussian on a grid no coarser
    than min(fwhm)/50. Uniform ascending grids are convolved by FFT on a refined grid.
    """
    fwhm_l = _width("fwhm_l", fwhm_l, allow_zero=True)
    fwhm_g = _width("fwhm_g", fwhm_g, allow_zero=True)
    if fwhm_l + fwhm_g <= 0:
        raise InvalidArgumentError("voigt needs a positive total width")
    if fwhm_g == 0:
        return lorentzian(nu, fwhm_l)
    if fwhm_l == 0:
        return gaussian(nu, fwhm_g)

    sigma = fwhm_g / FWHM_PER_SIGMA
    h = min(fwhm_l, fwhm_g) / _STEPS_PER_FWHM
    arr = np.asarray(nu, dtype=float)
    step = uniform_step(arr) if arr.ndim == 1 else None
    if step is not None and math.ceil(step / h) <= _MAX_REFINE:
        m = int(math.ceil(step / h))
        x, w = _gaussian_kernel(sigma, step / m)
        n_k = (len(x) - 1) // 2
        fine = arr[0] + (step / m) * np.arange(-n_k, m * (len(arr) - 1) + n_k + 1)
        out = fftconvolve(lorentzian(fine, fwhm_l), w, mode="valid")[::m][: len(arr)]
        return np.maximum(out, 0.0)

    x, w = _gaussian_kernel(sigma, h)
    flat = np.atleast_1d(arr).ravel()
    out = np.zeros_like(flat)
    for start in range(0, len(x), 64):
        xs, ws = x[start : start + 64], w[start : start + 64]
        out += lorentzian(flat[:, None] - xs[None, :], fwhm_l) @ ws
    return out.reshape(arr.shape) if arr.ndim else out[0]


def olivero_fwhm(fwhm_l: float, fwhm_g: float) -> float:
    return 0.5346 * fwhm_l + math.sqrt(0.2166 * fwhm_l**2 + fwhm_g**2)


def numeric_fwhm(nu: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum by linear interpolation of the half-max crossings."""
    nu = np.asarray(nu, dtype=float)
    y = np.asarray(y, dtype=float)
    i = int(np.argmax(y))
    half = 0.5 * y[i]
    left = np.flatnonzero(y[:i] < half)
    right = np.flatnonzero(y[i:] < half)
    if half <= 0 or left.size == 0 or right.size == 0:
        raise InsufficientRangeError("half maximum is not reached on both sides of the peak")
    l = left[-1]
    r = i + right[0]
    nu_l = nu[l] + (half - y[l]) * (nu[l + 1] - nu[l]) / (y[l + 1] - y[l])
    nu_r = nu[r - 1] + (half - y[r - 1]) * (nu[r] - nu[r - 1]) / (y[r] - y[r - 1])
    return float(nu_r - nu_l)
