from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from qdstream.emitter.excitation import rabi_rate
from qdstream.errors import InsufficientRangeError, InvalidArgumentError
from qdstream.fitting.minimize import Bounds, FitResult, minimize
from qdstream.instruments.histogram import CoincidenceHistogram
from qdstream.spectra.profiles import lorentzian, numeric_fwhm, voigt

N_STARTS = 3
START_FACTORS = (1.0, 0.5, 2.0)

Model = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class Dataset1D:
    x: np.ndarray
    y: np.ndarray
    y_err: np.ndarray | None = None
    x_unit: str = ""
    y_unit: str = ""

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if x.shape != y.shape or x.ndim != 1:
            raise InvalidArgumentError("x and y must be 1-D arrays of equal length")
        if self.y_err is not None:
            e = np.broadcast_to(np.asarray(self.y_err, dtype=float), y.shape).copy()
            if not np.all(e > 0):
                raise InvalidArgumentError("y_err must be > 0 where present")
            object.__setattr__(self, "y_err", e)

    def __len__(self) -> int:
        return len(self.x)

    def select(self, mask: np.ndarray) -> "Dataset1D":
        return replace(self, x=self.x[mask], y=self.y[mask], y_err=None if self.y_err is None else self.y_err[mask])

    @classmethod
    def from_histogram(
        cls, h: CoincidenceHistogram, lo: float | None = None, hi: float | None = None
    ) -> "Dataset1D":
        c = h.centers
        mask = np.ones(len(c), dtype=bool)
        if lo is not None:
            mask &= c >= lo
        if hi is not None:
            mask &= c <= hi
        return cls(x=c[mask], y=h.counts[mask].astype(float), x_unit="s", y_unit="counts")


def fit_model(
    model: Model,
    data: Dataset1D,
    names: Sequence[str],
    init: Sequence[float],
    bounds: Bounds,
    *,
    sigma: np.ndarray | None = None,
    absolute_sigma: bool | None = None,
    label: str = "",
) -> FitResult:
    """
    Weighted least squares with deterministic multi-start (init, init/2, 2*init clipped to bounds).
    Without sigma the fit is unit-weighted and errors are scaled by sqrt(chi2_reduced).
    """
    if len(data) <= len(names):
        raise InsufficientRangeError(f"{len(data)} points cannot constrain {len(names)} parameters")
    if sigma is None:
        sigma = data.y_err
    if absolute_sigma is None:
        absolute_sigma = sigma is not None
    if sigma is None:
        sigma = np.full(len(data), max(float(np.max(np.abs(data.y))), 1e-300))
    x, y = data.x, data.y

    def chi2(p: np.ndarray) -> float:
        return float(np.sum(((y - model(x, p)) / sigma) ** 2))

    lo = np.array([-np.inf if b[0] is None else b[0] for b in bounds], dtype=float)
    hi = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
    init = np.asarray(init, dtype=float)
    best: FitResult | None = None
    n_iter = 0
    for factor in START_FACTORS[:N_STARTS]:
        start = np.clip(init * factor, lo, hi)
        r = minimize(chi2, start, bounds, names=names)
        n_iter += r.n_iterations
        if best is None or r.objective_value < best.objective_value:
            best = r

    assert best is not None
    residuals = y - model(x, best.values)
    dof = max(len(data) - len(names), 1)
    chi2_red = best.objective_value / dof
    std = best.std_errors
    if not absolute_sigma:
        std = np.where(np.isfinite(std), std * math.sqrt(chi2_red), std)
    return replace(
        best,
        std_errors=std,
        residuals=residuals,
        chi2_reduced=chi2_red if absolute_sigma else float(np.sum(residuals**2)) / dof,
        n_iterations=n_iter,
        model=label,
    )


def _exp_model(baseline: bool) -> Model:
    def model(t: np.ndarray, p: np.ndarray) -> np.ndarray:
        out = p[0] * np.exp(-t / p[1])
        return out + p[2] if baseline else out

    return model


def fit_exponential(data: Dataset1D, *, baseline: bool = True, weights: str = "poisson") -> FitResult:
    """
    a*exp(-t/tau) (+ b). weights="poisson" treats y as counts: a first pass with sqrt(max(y, 1))
    errors, then a second with errors from the first-pass model. "uniform" fits unweighted.
    Explicit y_err always wins.
    """
    if weights not in ("poisson", "uniform"):
        raise InvalidArgumentError(f"unknown weights {weights!r}")
    x, y = data.x, data.y
    positive = np.clip(y, 0.0, None)
    if positive.sum() <= 0:
        raise InsufficientRangeError("no positive data to fit")
    tau0 = float(np.sum((x - x.min()) * positive) / positive.sum()) or float(np.ptp(x)) or 1.0
    a0 = float(max(positive.max(), 1e-300)) * math.exp(x[np.argmax(positive)] / tau0)
    names = ["amplitude", "tau"]
    init = [a0, tau0]
    bounds: list = [(0.0, None), (1e-6 * tau0, None)]
    if baseline:
        y_abs = max(float(np.max(np.abs(y))), 1e-300)
        names.append("baseline")
        init.append(0.0)
        bounds.append((-y_abs, y_abs))
    model = _exp_model(baseline)
    label = "exponential" + ("+baseline" if baseline else "")

    if data.y_err is not None or weights == "uniform":
        return fit_model(model, data, names, init, bounds, label=label)

    first = fit_model(model, data, names, init, bounds, sigma=np.sqrt(np.maximum(y, 1.0)), absolute_sigma=True,
                      label=label)
    sigma = np.sqrt(np.maximum(model(x, first.values), 1.0))
    return fit_model(model, data, names, first.values, bounds, sigma=sigma, absolute_sigma=True, label=label)


def fit_rabi(data: Dataset1D) -> FitResult:
    """
    r_max * sin^2((pi/2) sqrt(P/p_pi)). Data ending below p_pi/2 barely bend away from the
    linear rise, so p_pi trades off against r_max; such fits are flagged.
    """
    x, y = data.x, data.y
    i = int(np.argmax(y))
    p_pi0 = float(x[i]) if x[i] > 0 else float(np.max(x))
    r0 = float(max(y[i], 1e-300))

    def model(p_pump: np.ndarray, p: np.ndarray) -> np.ndarray:
        return rabi_rate(np.clip(p_pump, 0.0, None), p[1], p[0])

    result = fit_model(model, data, ["r_max", "p_pi"], [r0, p_pi0], [(0.0, None), (1e-9 * float(np.max(x)), None)],
                       label="rabi")
    if float(np.max(x)) < 0.5 * result.value("p_pi"):
        result = replace(result, flags=result.flags + ("truncated_below_half_p_pi",))
    return result


def _line_init(data: Dataset1D) -> Tuple[float, float, float, float, float]:
    x, y = data.x, data.y
    n_edge = max(len(y) // 20, 1)
    b0 = float(np.median(np.r_[y[:n_edge], y[-n_edge:]]))
    i = int(np.argmax(y - b0))
    try:
        w = numeric_fwhm(x, y - b0)
    except InsufficientRangeError:
        w = 10.0 * float(np.mean(np.diff(x)))
    a0 = float(trapezoid(y - b0, x))
    if a0 <= 0:
        a0 = float((y[i] - b0) * w)
    return a0, float(x[i]), w, b0, max(float(np.max(np.abs(y))), 1e-300)


def fit_voigt(data: Dataset1D, instrument_fwhm_l: float = 0.0) -> FitResult:
    """
    amplitude*Voigt(nu - nu0; fwhm_l + instrument_fwhm_l, fwhm_g) + baseline. fwhm_l is the
    intrinsic Lorentzian width; the half-max width seeds fwhm_l and fwhm_g equally.
    """
    a0, nu0, w, b0, y_abs = _line_init(data)
    fl0 = max(0.5 * w - instrument_fwhm_l, 0.05 * w)
    fg0 = 0.5 * w
    fl_min = 0.0 if instrument_fwhm_l > 0 else 1e-3 * w

    def model(nu: np.ndarray, p: np.ndarray) -> np.ndarray:
        return p[0] * voigt(nu - p[1], p[2] + instrument_fwhm_l, p[3]) + p[4]

    return fit_model(
        model,
        data,
        ["amplitude", "nu0", "fwhm_l", "fwhm_g", "baseline"],
        [a0, nu0, fl0, fg0, b0],
        [(0.0, None), (nu0 - w, nu0 + w), (fl_min, 4.0 * w), (0.0, 4.0 * w), (-y_abs, y_abs)],
        label="voigt",
    )


def fit_lorentzian(data: Dataset1D, instrument_fwhm_l: float = 0.0) -> FitResult:
    a0, nu0, w, b0, y_abs = _line_init(data)
    fl0 = max(w - instrument_fwhm_l, 0.05 * w)
    fl_min = 0.0 if instrument_fwhm_l > 0 else 1e-3 * w

    def model(nu: np.ndarray, p: np.ndarray) -> np.ndarray:
        return p[0] * lorentzian(nu - p[1], p[2] + instrument_fwhm_l) + p[3]

    return fit_model(
        model,
        data,
        ["amplitude", "nu0", "fwhm_l", "baseline"],
        [a0, nu0, fl0, b0],
        [(0.0, None), (nu0 - w, nu0 + w), (fl_min, 4.0 * w), (-y_abs, y_abs)],
        label="lorentzian",
    )


def visibility_decay(delta: np.ndarray, v0: float, v_inf: float, tau_d: float) -> np.ndarray:
    return v_inf + (v0 - v_inf) * np.exp(-np.asarray(delta, dtype=float) / tau_d)


def fit_visibility_decay(data: Dataset1D) -> FitResult:
    """V(delta) = v_inf + (v0 - v_inf) exp(-delta/tau_d); tau_d is flagged when v0 == v_inf."""
    order = np.argsort(data.x)
    x, y = data.x[order], data.y[order]
    v0, v_inf = float(y[0]), float(y[-1])
    mid = 0.5 * (v0 + v_inf)
    crossed = np.flatnonzero((y - mid) * np.sign(v0 - v_inf) <= 0)
    tau0 = float(x[crossed[0]]) if crossed.size and v0 != v_inf else float(np.median(x))
    tau0 = max(tau0, float(np.min(x[x > 0])) if np.any(x > 0) else 1.0)
    span = max(float(np.ptp(y)), 1e-3)

    def model(d: np.ndarray, p: np.ndarray) -> np.ndarray:
        return visibility_decay(d, p[0], p[1], p[2])

    result = fit_model(
        model,
        data,
        ["v0", "v_inf", "tau_d"],
        [v0, v_inf, tau0],
        [(v0 - 10 * span, v0 + 10 * span), (v_inf - 10 * span, v_inf + 10 * span), (1e-3 * tau0, None)],
        label="visibility_decay",
    )
    v0_fit, vinf_fit = result.value("v0"), result.value("v_inf")
    if abs(v0_fit - vinf_fit) <= 1e-6 * max(abs(vinf_fit), 1e-12):
        std = result.std_errors.copy()
        std[2] = np.inf
        flags = tuple(f for f in result.flags if f != "zero_curvature:tau_d") + ("unidentifiable:tau_d",)
        result = replace(result, std_errors=std, flags=flags)
    return result
