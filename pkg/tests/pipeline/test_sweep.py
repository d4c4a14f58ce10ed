from __future__ import annotations

import numpy as np
import pytest

from qdstream.errors import InvalidArgumentError
from qdstream.instruments.interference import visibility_vs_separation
from qdstream.pipeline.sweep import cmd_sweep, parse_values


def test_parse_values():
    assert parse_values("0, 1e-12,2") == [0.0, 1e-12, 2.0]
    with pytest.raises(InvalidArgumentError):
        parse_values("1,abc")
    with pytest.raises(InvalidArgumentError):
        parse_values("1,nan")
    with pytest.raises(InvalidArgumentError):
        parse_values("")


def test_jitter_sweep_lowers_visibility(run):
    t1 = run.emitter.t1
    df = cmd_sweep(run, "sigma_jitter", [0.0, 0.5 * t1, t1, 2 * t1], "visibility")
    assert len(df) == 4
    assert np.all(np.diff(df["visibility"]) < 0)


def test_correlation_time_sweep_raises_visibility(run):
    df = cmd_sweep(run, "tau_c", [0.07e-6, 0.7e-6, 7e-6], "visibility", delta_t=1e-6)
    assert np.all(np.diff(df["visibility"]) > 0)


def test_single_value_equals_direct_evaluation(run):
    df = cmd_sweep(run, "t2_hom", [300e-12], "visibility")
    p = run.emitter.with_values(t2_hom=300e-12)
    assert df["visibility"].iloc[0] == pytest.approx(visibility_vs_separation(p, p.period))


def test_t2_metric_and_g2_metric(run):
    df = cmd_sweep(run, "sigma_omega", [0.0, 1.25e9], "t2_eff")
    assert df["t2_eff"].iloc[0] == pytest.approx(run.emitter.t2_hom, rel=1e-3)
    assert df["t2_eff"].iloc[1] < df["t2_eff"].iloc[0]
    g2 = cmd_sweep(run, "p2", [0.0], "g2", n_pulses=20_000)
    assert g2["g2"].iloc[0] == 0.0


def test_unknown_names_rejected(run):
    with pytest.raises(InvalidArgumentError):
        cmd_sweep(run, "colour", [1.0], "visibility")
    with pytest.raises(InvalidArgumentError):
        cmd_sweep(run, "t1", [1e-10], "brightness")
