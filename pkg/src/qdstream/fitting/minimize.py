from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from qdstream.errors import FitError, InvalidArgumentError

XATOL = 1e-9
MAXITER = 10_000
INITIAL_STEP = 0.1
# forward-difference step in normalized coordinates
_FD_STEP = 1e-5
_FLAT_CURVATURE = 1e-14

Bounds = Sequence[Tuple[Optional[float], Optional[float]]]


@dataclass
class FitResult:
    param_names: Tuple[str, ...]
    values: np.ndarray
    std_errors: np.ndarray
    chi2_reduced: float = float("nan")
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))
    converged: bool = False
    n_iterations: int = 0
    flags: Tuple[str, ...] = ()
    objective_value: float = float("nan")
    model: str = ""

    def value(self, name: str) -> float:
        return float(self.values[self.param_names.index(name)])

    def error(self, name: str) -> float:
        return float(self.std_errors[self.param_names.index(name)])

    def as_dict(self) -> Dict[str, float]:
        out: Dict[str, float] = {}
        for name, v, e in zip(self.param_names, self.values, self.std_errors):
            out[name] = float(v)
            out[f"{name}_err"] = float(e)
        return out

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {"model": self.model}
        row.update(self.as_dict())
        row.update(
            chi2_reduced=float(self.chi2_reduced),
            converged=bool(self.converged),
            n_iterations=int(self.n_iterations),
            flags=";".join(self.flags),
        )
        return row

    def to_text(self) -> str:
        lines = [f"fit: {self.model or 'objective'}"]
        for name, v, e in zip(self.param_names, self.values, self.std_errors):
            lines.append(f"  {name:<12s} = {v:.6g} +/- {e:.3g}")
        lines.append(f"  chi2_reduced = {self.chi2_reduced:.4g}")
        lines.append(f"  converged    = {self.converged} ({self.n_iterations} iterations)")
        if self.flags:
            lines.append(f"  flags        = {', '.join(self.flags)}")
        return "\n".join(lines)


def _normalization(x0: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """x = offset + scale * u; boxed parameters map to [0, 1], others are scaled by |init|."""
    boxed = np.isfinite(lo) & np.isfinite(hi)
    offset = np.where(boxed, lo, 0.0)
    scale = np.where(boxed, hi - lo, np.where(x0 != 0, np.abs(x0), 1.0))
    return offset, scale


def _curvature(f: Callable[[np.ndarray], float], u: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Forward-difference Hessian, stepping away from any bound within reach."""
    n = len(u)
    h = _FD_STEP * np.maximum(1.0, np.abs(u))
    s = np.where(u + 2.0 * h <= hi, 1.0, np.where(u - 2.0 * h >= lo, -1.0, 1.0))
    step = s * h
    f0 = f(u)
    f1 = np.empty(n)
    f2 = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = step[i]
        f1[i] = f(u + e)
        f2[i] = f(u + 2.0 * e)
    hess = np.empty((n, n))
    for i in range(n):
        hess[i, i] = (f2[i] - 2.0 * f1[i] + f0) / h[i] ** 2
        for j in range(i + 1, n):
            e = np.zeros(n)
            e[i], e[j] = step[i], step[j]
            hij = (f(u + e) - f1[i] - f1[j] + f0) / (step[i] * step[j])
            hess[i, j] = hess[j, i] = hij
    return hess


def _std_from_curvature(hess: np.ndarray, names: Sequence[str]) -> Tuple[np.ndarray, List[str]]:
    """sqrt(diag(2 H^-1)) for a chi-square objective; flat directions get inf."""
    n = len(names)
    diag = np.diag(hess)
    top = max(float(np.max(diag)), 0.0) if n else 0.0
    flat = (diag <= 0) | (diag <= _FLAT_CURVATURE * top) | ~np.isfinite(diag)
    flags = [f"zero_curvature:{names[i]}" for i in np.flatnonzero(flat)]
    std = np.full(n, np.inf)
    keep = np.flatnonzero(~flat)
    if keep.size:
        sub = hess[np.ix_(keep, keep)]
        try:
            cov = 2.0 * np.linalg.inv(sub)
        except np.linalg.LinAlgError:
            cov = 2.0 * np.linalg.pinv(sub)
            flags.append("singular_curvature")
        var = np.diag(cov)
        bad = ~(var >= 0)
        if bad.any():
            flags.append("indefinite_curvature")
        std[keep] = np.sqrt(np.where(bad, np.inf, var))
    return std, flags


def minimize(
    objective: Callable[[np.ndarray], float],
    init: Sequence[float],
    bounds: Bounds | None = None,
    *,
    names: Sequence[str] | None = None,
    xatol: float = XATOL,
    maxiter: int = MAXITER,
) -> FitResult:
    """
    Bounded Nelder-Mead in normalized coordinates. Converges when the simplex diameter drops
    below xatol (relative to each parameter's box or initial magnitude) or after maxiter steps.
    std_errors assume the objective is a chi-square.
    """
    x0 = np.asarray(init, dtype=float)
    n = len(x0)
    names = tuple(names) if names is not None else tuple(f"p{i}" for i in range(n))
    if len(names) != n:
        raise InvalidArgumentError("names and init differ in length")
    if bounds is None:
        bounds = [(None, None)] * n
    lo = np.array([-np.inf if b[0] is None else float(b[0]) for b in bounds])
    hi = np.array([np.inf if b[1] is None else float(b[1]) for b in bounds])
    if np.any(lo >= hi) or np.any(x0 < lo) or np.any(x0 > hi) or not np.all(np.isfinite(x0)):
        raise InvalidArgumentError(f"init {x0.tolist()} is not inside the bounds")

    offset, scale = _normalization(x0, lo, hi)
    u_lo = (lo - offset) / scale
    u_hi = (hi - offset) / scale

    def f_u(u: np.ndarray) -> float:
        x = offset + scale * u
        v = float(objective(x))
        if not math.isfinite(v):
            raise FitError(f"objective is not finite at {x.tolist()}")
        return v

    u0 = (x0 - offset) / scale
    f0 = f_u(u0)
    simplex = np.tile(u0, (n + 1, 1))
    for i in range(n):
        step = INITIAL_STEP if u0[i] + INITIAL_STEP <= u_hi[i] else -INITIAL_STEP
        simplex[i + 1, i] += step

    res = optimize.minimize(
        f_u,
        u0,
        method="Nelder-Mead",
        bounds=list(zip(np.where(np.isfinite(u_lo), u_lo, None), np.where(np.isfinite(u_hi), u_hi, None))),
        options={"xatol": xatol, "fatol": np.inf, "maxiter": maxiter, "maxfev": 100 * maxiter,
                 "initial_simplex": simplex},
    )
    u_best, f_best = np.asarray(res.x, dtype=float), float(res.fun)
    if not f_best < f0:
        u_best, f_best = u0, f0

    hess = _curvature(f_u, u_best, u_lo, u_hi)
    std_u, flags = _std_from_curvature(hess, names)
    return FitResult(
        param_names=names,
        values=offset + scale * u_best,
        std_errors=std_u * scale,
        converged=bool(res.status == 0),
        n_iterations=int(res.nit),
        flags=tuple(flags),
        objective_value=f_best,
    )
