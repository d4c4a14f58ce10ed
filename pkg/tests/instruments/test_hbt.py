from __future__ import annotations

import numpy as np
import pytest

from qdstream.emitter.params import EmitterParams
from qdstream.emitter.stream import apply_losses, generate_stream
from qdstream.errors import InsufficientRangeError
from qdstream.instruments.hbt import g2_zero, hbt_histogram


def test_perfect_single_photons_have_no_zero_delay_peak(seed):
    p = EmitterParams(p1=1.0, p2=0.0)
    h = hbt_histogram(generate_stream(p, 20_000, seed), None, seed)
    g, err = g2_zero(h)
    assert g == 0.0
    assert err > 0


def test_g2_follows_two_photon_probability(seed):
    p = EmitterParams(p1=0.9, p2=0.05)
    h = hbt_histogram(generate_stream(p, 200_000, seed), None, seed)
    g, err = g2_zero(h)
    expected = 2 * p.p2 / p.mean_photon_number**2
    assert abs(g - expected) < 4 * err


def test_g2_is_insensitive_to_losses(seed):
    p = EmitterParams(p1=0.9, p2=0.05)
    stream = apply_losses(generate_stream(p, 400_000, seed), 0.5, seed)
    g, err = g2_zero(hbt_histogram(stream, None, seed))
    assert abs(g - 2 * p.p2 / p.mean_photon_number**2) < 4 * err


def test_too_few_side_peaks_raise(params, seed):
    h = hbt_histogram(generate_stream(params, 5000, seed), None, seed, n_side=3)
    with pytest.raises(InsufficientRangeError):
        g2_zero(h)


def test_empty_stream_histogram_is_flagged(seed):
    s = generate_stream(EmitterParams(p1=0.0, p2=0.0), 100, seed)
    h = hbt_histogram(s, None, seed)
    assert "empty_stream" in h.flags
    with pytest.raises(InsufficientRangeError):
        g2_zero(h)


@pytest.mark.slow
def test_default_g2_acceptance(params, seed):
    n = 10_000_000
    h = hbt_histogram(generate_stream(params, n, seed, workers=2), n, seed, workers=2)
    g, _ = g2_zero(h)
    assert g == pytest.approx(0.007, abs=0.002)


def test_pair_coincidences_are_separated_by_one_lifetime(seed):
    p = EmitterParams(p1=0.0, p2=1.0, sigma_jitter=0.0)
    h = hbt_histogram(generate_stream(p, 20_000, seed), None, seed, bin_width=10e-12)
    central = np.abs(h.centers) < 1.5e-9
    mean_gap = np.average(np.abs(h.centers[central]), weights=h.counts[central])
    assert mean_gap == pytest.approx(p.t1, rel=0.05)
