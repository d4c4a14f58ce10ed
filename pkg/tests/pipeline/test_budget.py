from __future__ import annotations

import pytest

from qdstream.emitter.params import EmitterParams
from qdstream.pipeline.budget import budget_chain, budget_table, detected_rate, fiber_rate


def test_default_rate_chain(params):
    df = budget_chain(params)
    assert df["stage"].tolist()[0] == "repetition rate"
    assert df["rate_per_s"].iloc[0] == pytest.approx(76.4e6)
    assert fiber_rate(params) == pytest.approx(5.04e6, rel=0.01)
    assert detected_rate(params) == pytest.approx(1.67e6, rel=0.01)
    assert df["rate_per_s"].iloc[-1] == pytest.approx(detected_rate(params))


def test_lossless_chain_keeps_repetition_rate():
    p = EmitterParams(p1=1.0, p2=0.0, eta_fiber=1.0, eta_det=1.0)
    assert detected_rate(p) == pytest.approx(76.4e6)
    assert budget_chain(p)["rate_per_s"].nunique() == 1


def test_budget_table_has_a_row_per_stage(params):
    assert budget_table(budget_chain(params)).row_count == 4
