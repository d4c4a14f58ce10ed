from __future__ import annotations

import pandas as pd
from rich.table import Table

from qdstream.emitter.params import EmitterParams


def budget_chain(params: EmitterParams) -> pd.DataFrame:
    """Rate chain from the laser repetition rate down to detected photons, one row per stage."""
    stages = [
        ("repetition rate", "rep_rate", 1.0),
        ("single-photon emission", "p1", params.p1),
        ("single-mode fiber output", "eta_fiber", params.eta_fiber),
        ("detection", "eta_det", params.eta_det),
    ]
    rows = []
    rate = params.rep_rate
    for stage, key, factor in stages:
        rate = rate * factor
        rows.append({"stage": stage, "parameter": key, "factor": factor, "rate_per_s": rate})
    return pd.DataFrame(rows)


def fiber_rate(params: EmitterParams) -> float:
    return params.rep_rate * params.p1 * params.eta_fiber


def detected_rate(params: EmitterParams) -> float:
    return fiber_rate(params) * params.eta_det


def budget_table(df: pd.DataFrame) -> Table:
    t = Table(title="Photon budget")
    t.add_column("Stage")
    t.add_column("Factor", justify="right")
    t.add_column("Rate (1/s)", justify="right")
    for row in df.itertuples(index=False):
        factor = "" if row.parameter == "rep_rate" else f"x {row.factor:.4g}"
        t.add_row(row.stage, factor, f"{row.rate_per_s:.3e}")
    return t
