from __future__ import annotations

import math
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from qdstream.emitter.params import EmitterParams, field_names
from qdstream.emitter.stream import generate_stream
from qdstream.errors import InvalidArgumentError
from qdstream.fitting.models import Dataset1D, fit_exponential
from qdstream.instruments.hbt import g2_zero, hbt_histogram
from qdstream.instruments.interference import mz_fringe_contrast, visibility_vs_separation
from qdstream.pipeline.run_config import RunConfig

SWEEP_PARAMS = tuple(field_names()) + ("t2_hom",)
SWEEP_METRICS = ("visibility", "g2", "t2_eff")

# fringe delays used for the t2_eff metric
T2_TAUS = np.arange(0.0, 600e-12 + 1e-15, 20e-12)
G2_PULSES = 1_000_000


def parse_values(text: str) -> List[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as e:
        raise InvalidArgumentError(f"sweep values must be comma-separated numbers: {e}") from e
    if not values:
        raise InvalidArgumentError("sweep needs at least one value")
    bad = [v for v in values if not math.isfinite(v)]
    if bad:
        raise InvalidArgumentError(f"sweep values must be finite, got {bad}")
    return values


def t2_eff(params: EmitterParams) -> Tuple[float, float]:
    """Coherence time from a single-exponential fit to the model fringe contrast up to 600 ps."""
    contrast = np.asarray(mz_fringe_contrast(params, T2_TAUS))
    fit = fit_exponential(Dataset1D(T2_TAUS, contrast, x_unit="s"), baseline=False, weights="uniform")
    return fit.value("tau"), fit.error("tau")


def evaluate_metric(
    metric: str,
    params: EmitterParams,
    run: RunConfig,
    *,
    delta_t: float | None = None,
    n_pulses: int = G2_PULSES,
) -> Tuple[float, float]:
    if metric == "visibility":
        delta = params.period if delta_t is None else delta_t
        return float(visibility_vs_separation(params, delta)), 0.0
    if metric == "g2":
        stream = generate_stream(params, n_pulses, run.seed, workers=run.workers, chunk_pulses=run.chunk_pulses)
        h = hbt_histogram(stream, n_pulses, run.seed, workers=run.workers, chunk_pulses=run.chunk_pulses)
        return g2_zero(h)
    if metric == "t2_eff":
        return t2_eff(params)
    raise InvalidArgumentError(f"unknown sweep metric {metric!r}; choose from {', '.join(SWEEP_METRICS)}")


def cmd_sweep(
    run: RunConfig,
    param_name: str,
    values: Sequence[float],
    metric: str,
    *,
    delta_t: float | None = None,
    n_pulses: int = G2_PULSES,
) -> pd.DataFrame:
    """One row per value. Every row reuses the run seed, so rows differ only through the parameter."""
    if param_name not in SWEEP_PARAMS:
        raise InvalidArgumentError(f"unknown sweep parameter {param_name!r}")
    if metric not in SWEEP_METRICS:
        raise InvalidArgumentError(f"unknown sweep metric {metric!r}")

    rows: List[Dict[str, float]] = []
    for value in values:
        params = run.emitter.with_values(**{param_name: float(value)})
        m, err = evaluate_metric(metric, params, run, delta_t=delta_t, n_pulses=n_pulses)
        rows.append({param_name: float(value), metric: m, f"{metric}_err": err})
    return pd.DataFrame(rows)
