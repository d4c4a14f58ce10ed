from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from qdstream.errors import GridMismatchError, InvalidArgumentError
from qdstream.instruments.histogram import (
    CoincidenceHistogram,
    bin_values,
    cross_correlate,
    merge_histograms,
    peak_areas,
)


def _brute_force(t_a, t_b, bin_width, t_min, t_max):
    d = (t_b[None, :] - t_a[:, None]).ravel()
    d = d[(d >= t_min) & (d < t_max)]
    n_bins = int(round((t_max - t_min) / bin_width))
    return bin_values(d, bin_width, t_min, n_bins)


def test_cross_correlate_matches_all_pairs():
    rng = np.random.default_rng(0)
    t_a = np.sort(rng.uniform(0, 1e-6, 300))
    t_b = np.sort(rng.uniform(0, 1e-6, 250))
    expected = _brute_force(t_a, t_b, 1e-9, -50e-9, 50e-9)
    got = cross_correlate(t_a, t_b, 1e-9, -50e-9, 50e-9, block_events=7)
    np.testing.assert_array_equal(got, expected)


def test_cross_correlate_is_worker_independent():
    rng = np.random.default_rng(1)
    t_a = np.sort(rng.uniform(0, 1e-5, 5000))
    t_b = np.sort(rng.uniform(0, 1e-5, 5000))
    serial = cross_correlate(t_a, t_b, 1e-9, -20e-9, 20e-9, block_events=500)
    parallel = cross_correlate(t_a, t_b, 1e-9, -20e-9, 20e-9, workers=2, block_events=500)
    np.testing.assert_array_equal(serial, parallel)


def test_empty_inputs_give_zero_counts():
    counts = cross_correlate(np.empty(0), np.array([1.0]), 1e-9, -5e-9, 5e-9)
    assert counts.shape == (10,)
    assert counts.sum() == 0


def test_histogram_geometry():
    h = CoincidenceHistogram.from_values([0.5e-9, 1.5e-9, 1.6e-9, 9e-9], 1e-9, 0.0, 4e-9)
    assert h.n_bins == 4
    np.testing.assert_array_equal(h.counts, [1, 2, 0, 0])
    np.testing.assert_allclose(h.centers, [0.5e-9, 1.5e-9, 2.5e-9, 3.5e-9])
    assert h.area(0.0, 2e-9) == 3
    assert h.area(1e-9, 2e-9) == 2
    assert h.mean() == pytest.approx((0.5e-9 + 2 * 1.5e-9) / 3)
    assert list(h.to_frame().columns) == ["bin_center_ps", "counts"]


def test_counts_must_match_bins():
    with pytest.raises(InvalidArgumentError):
        CoincidenceHistogram(bin_width=1.0, t_min=0.0, t_max=4.0, counts=np.zeros(3))


def test_merge_sums_counts_and_rejects_other_binning():
    a = CoincidenceHistogram.from_values([0.5, 1.5], 1.0, 0.0, 3.0, meta={"n_meetings": 2})
    b = CoincidenceHistogram.from_values([1.5, 2.5], 1.0, 0.0, 3.0, meta={"n_meetings": 3})
    m = merge_histograms([a, b])
    np.testing.assert_array_equal(m.counts, [1, 2, 1])
    assert m.meta["n_meetings"] == 5
    with pytest.raises(GridMismatchError):
        a.merge(CoincidenceHistogram.empty(0.5, 0.0, 3.0))
    with pytest.raises(InvalidArgumentError):
        merge_histograms([])


def test_peak_areas_split_by_period():
    period = 10e-9
    centres = np.arange(-3, 4) * period
    weights = np.array([5, 6, 7, 1, 8, 9, 10])
    h = CoincidenceHistogram.from_values(np.repeat(centres, weights) + 0.1e-9, 0.2e-9, -3.5 * period, 3.5 * period)
    central, side = peak_areas(h, period, window=1.5e-9)
    assert central == 1
    assert side == {-3: 5, -2: 6, -1: 7, 1: 8, 2: 9, 3: 10}
    _, near = peak_areas(h, period, n_side=1, window=1.5e-9)
    assert set(near) == {-1, 1}
    with pytest.raises(InvalidArgumentError):
        peak_areas(h, period, window=6e-9)


def test_replace_keeps_binning():
    h = CoincidenceHistogram.empty(1.0, -2.0, 2.0)
    assert replace(h, counts=np.ones(4, dtype=np.int64)).same_binning(h)
