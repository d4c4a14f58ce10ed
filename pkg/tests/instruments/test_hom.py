from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from qdstream.emitter.params import EmitterParams
from qdstream.emitter.stream import generate_stream
from qdstream.errors import GridMismatchError, InvalidArgumentError, UndefinedVisibilityError
from qdstream.instruments.histogram import CoincidenceHistogram
from qdstream.instruments.hom import (
    HomConfig,
    Polarization,
    delay_pulses_for,
    expected_meeting_rate,
    extract_visibility,
    hom_monte_carlo,
    multiphoton_background,
    side_peak_visibility,
)
from qdstream.instruments.interference import visibility_vs_separation


def _run_pair(params, n_pulses, k, seed, **kwargs):
    stream = generate_stream(params, n_pulses, seed)
    config = HomConfig(delay_pulses=k)
    h_par = hom_monte_carlo(stream, config, n_pulses, seed, **kwargs)
    h_cross = hom_monte_carlo(stream, config.with_polarization("cross"), n_pulses, seed, **kwargs)
    return h_par, h_cross


def _synthetic(central: int, period: float = 10e-9) -> CoincidenceHistogram:
    h = CoincidenceHistogram.empty(0.5e-9, -4.5 * period, 4.5 * period, meta={"period": period, "delay_pulses": 1})
    counts = h.counts.copy()
    for j in range(-4, 5):
        counts[np.argmin(np.abs(h.centers - j * period))] = central if j == 0 else 100
    return replace(h, counts=counts)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        HomConfig(delay_pulses=0)
    with pytest.raises(InvalidArgumentError):
        HomConfig(delay_pulses=1, splitter_ratio=1.0)
    assert HomConfig(delay_pulses=3, polarization="cross").polarization is Polarization.CROSS


def test_delay_pulses_for_measured_separations(params):
    assert delay_pulses_for(13.1e-9, params) == 1
    assert delay_pulses_for(14.7e-6, params) == 1123
    assert delay_pulses_for(1e-12, params) == 1
    assert HomConfig(delay_pulses=1123).separation(params) == pytest.approx(14.7e-6, rel=1e-3)


def test_extract_visibility_from_areas():
    v, err = extract_visibility(_synthetic(10), _synthetic(100))
    assert v == pytest.approx(0.9)
    assert err == pytest.approx(math.sqrt(10 / 100**2 + 0.01 / 100))


def test_extract_visibility_errors():
    with pytest.raises(UndefinedVisibilityError):
        extract_visibility(_synthetic(10), _synthetic(0))
    other = CoincidenceHistogram.empty(1e-9, -45e-9, 45e-9)
    with pytest.raises(GridMismatchError):
        extract_visibility(_synthetic(10), other)


def test_extract_visibility_subtracts_background():
    v, err = extract_visibility(_synthetic(30), _synthetic(120), background=20.0)
    assert v == pytest.approx(0.9)
    assert err == pytest.approx(math.sqrt(30 / 100**2 + 0.01 * 120 / 100**2))
    assert extract_visibility(_synthetic(10), _synthetic(100), background=0.0) == extract_visibility(
        _synthetic(10), _synthetic(100)
    )


def test_background_swallowing_cross_area_is_undefined():
    with pytest.raises(UndefinedVisibilityError):
        extract_visibility(_synthetic(10), _synthetic(100), background=100.0)
    with pytest.raises(InvalidArgumentError):
        extract_visibility(_synthetic(10), _synthetic(100), background=-1.0)


def test_side_peak_visibility_uses_uncorrelated_peaks():
    v, _ = side_peak_visibility(_synthetic(10), _synthetic(100))
    assert v == pytest.approx(0.9)


def test_empty_stream_is_flagged(params, seed):
    empty = generate_stream(EmitterParams(p1=0.0, p2=0.0), 100, seed)
    h = hom_monte_carlo(empty, HomConfig(delay_pulses=1), None, seed)
    assert "empty_stream" in h.flags
    assert h.total == 0


def test_stream_shorter_than_delay_rejected(params, seed):
    stream = generate_stream(params, 10, seed)
    with pytest.raises(InvalidArgumentError):
        hom_monte_carlo(stream, HomConfig(delay_pulses=10), None, seed)


def test_cross_polarization_never_coalesces(params, seed):
    p = params.with_values(p2=0.0)
    h_par, h_cross = _run_pair(p, 20_000, 1, seed)
    assert h_cross.meta["n_coalesced"] == 0
    assert h_par.meta["n_coalesced"] > 0
    assert h_par.meta["n_meetings"] == h_cross.meta["n_meetings"]
    assert h_par.area(-1.5e-9, 1.5e-9) < 0.1 * h_cross.area(-1.5e-9, 1.5e-9)


def test_meeting_rate_matches_expectation(params, seed):
    p = params
    n = 40_000
    _, h_cross = _run_pair(p, n, 1, seed)
    rate = expected_meeting_rate(p, HomConfig(delay_pulses=1))
    assert rate == pytest.approx(p.p1**2 / 4)
    assert expected_meeting_rate(p, HomConfig(delay_pulses=1), eta=0.5) == pytest.approx(p.p1**2 / 16)
    assert abs(h_cross.meta["n_meetings"] - rate * n) < 3 * math.sqrt(rate * n)


def test_worker_count_does_not_change_histogram(params, seed):
    a, _ = _run_pair(params, 20_000, 1, seed, chunk_pulses=4096)
    b, _ = _run_pair(params, 20_000, 1, seed, chunk_pulses=4096, workers=2)
    np.testing.assert_array_equal(a.counts, b.counts)


def test_short_separation_agrees_with_model(params, seed):
    p = params.with_values(p2=0.0)
    v, err = extract_visibility(*_run_pair(p, 200_000, 1, seed))
    assert abs(v - visibility_vs_separation(p, p.period)) < 3 * err + 1e-3


@pytest.mark.slow
def test_short_separation_acceptance(params, seed):
    p = params.with_values(p2=0.0)
    v, err = extract_visibility(*_run_pair(p, 1_000_000, 1, seed))
    v_model = visibility_vs_separation(p, p.period)
    assert 0.94 <= v_model <= 0.98
    assert abs(v - v_model) < 3 * err


@pytest.mark.slow
@pytest.mark.parametrize("k", [64, 1123])
def test_long_separation_agrees_with_model(fast_noise_params, seed, k):
    p = fast_noise_params
    v, err = extract_visibility(*_run_pair(p, 400_000, k, seed))
    assert abs(v - visibility_vs_separation(p, k * p.period)) < 3 * err + 2e-3


def test_multiphoton_background_vanishes_without_pairs(params):
    p = params.with_values(p2=0.0)
    assert multiphoton_background(p, HomConfig(delay_pulses=1), 100_000) == pytest.approx(0.0, abs=1e-9)


def test_multiphoton_background_counts_edge_slots(params):
    p = params.with_values(p1=0.0, p2=0.2)
    # full slot: (2 * 0.2 * 0.5 + 2 * 0.25 * 0.4**2) / 4; edge slot: 2 * 0.2 * 0.5 / 4
    assert multiphoton_background(p, HomConfig(delay_pulses=3), 10) == pytest.approx(7 * 0.07 + 3 * 0.05)
    with pytest.raises(InvalidArgumentError):
        multiphoton_background(p, HomConfig(delay_pulses=3), 3)


def test_cross_zero_delay_area_is_half_the_meetings(params, seed):
    p = params.with_values(p2=0.0)
    _, h_cross = _run_pair(p, 100_000, 1, seed)
    n = h_cross.meta["n_meetings"]
    assert abs(h_cross.area(-1.5e-9, 1.5e-9) - n / 2) < 3 * math.sqrt(n / 4)


def test_cross_zero_delay_area_includes_multiphoton_background(params, seed):
    n_pulses = 200_000
    config = HomConfig(delay_pulses=1)
    _, h_cross = _run_pair(params, n_pulses, 1, seed)
    expected = multiphoton_background(params, config, n_pulses) + expected_meeting_rate(params, config) * (n_pulses - 1) / 2
    assert abs(h_cross.area(-1.5e-9, 1.5e-9) - expected) < 3 * math.sqrt(expected)


def test_default_source_agrees_with_model(params, seed):
    n_pulses = 200_000
    h_par, h_cross = _run_pair(params, n_pulses, 1, seed)
    b = multiphoton_background(params, HomConfig(delay_pulses=1), n_pulses)
    v, err = extract_visibility(h_par, h_cross, background=b)
    assert abs(v - visibility_vs_separation(params, params.period)) < 3 * err + 1e-3


@pytest.mark.slow
def test_default_source_acceptance(seed):
    params = EmitterParams()
    n_pulses = 1_000_000
    h_par, h_cross = _run_pair(params, n_pulses, 1, seed)
    b = multiphoton_background(params, HomConfig(delay_pulses=1), n_pulses)
    v, err = extract_visibility(h_par, h_cross, background=b)
    assert abs(v - visibility_vs_separation(params, params.period)) < 3 * err
    v_raw, _ = extract_visibility(h_par, h_cross)
    assert v_raw < v
