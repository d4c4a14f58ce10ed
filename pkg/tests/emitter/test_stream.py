from __future__ import annotations

import math

import numpy as np
import pytest

from qdstream.emitter.params import EmitterParams
from qdstream.emitter.stream import (
    Multiplicity,
    PhotonRecord,
    PhotonStream,
    apply_losses,
    generate_stream,
    radiative_arrival,
)
from qdstream.errors import InvalidArgumentError
from qdstream.pipeline.budget import fiber_rate


def _same(a, b) -> bool:
    return (
        np.array_equal(a.pulse_index, b.pulse_index)
        and np.array_equal(a.t_emit, b.t_emit)
        and np.array_equal(a.omega, b.omega)
        and np.array_equal(a.multiplicity, b.multiplicity)
    )


def test_fixed_seed_is_reproducible(params, seed):
    a = generate_stream(params, 5000, seed)
    b = generate_stream(params, 5000, seed)
    c = generate_stream(params, 5000, seed + 1)
    assert _same(a, b)
    assert not _same(a, c)


@pytest.mark.parametrize("workers", [2, 8])
def test_worker_count_does_not_change_stream(params, seed, workers):
    serial = generate_stream(params, 10_000, seed, workers=1, chunk_pulses=1024)
    parallel = generate_stream(params, 10_000, seed, workers=workers, chunk_pulses=1024)
    assert _same(serial, parallel)


def test_deterministic_single_photons():
    p = EmitterParams(p1=1.0, p2=0.0)
    s = generate_stream(p, 1000, 5)
    assert len(s) == 1000
    assert np.all(s.multiplicity == Multiplicity.SINGLE)
    np.testing.assert_array_equal(s.pulse_index, np.arange(1000))
    np.testing.assert_allclose(s.emission_offset, 0.0, atol=1e-18)


def test_no_emission_gives_empty_stream():
    s = generate_stream(EmitterParams(p1=0.0, p2=0.0), 1000, 5)
    assert len(s) == 0
    assert list(s) == []


def test_pair_fraction_and_ordering():
    p = EmitterParams(p1=0.7, p2=0.2)
    n = 50_000
    s = generate_stream(p, n, 11)
    n_pairs = int(np.sum(s.multiplicity == Multiplicity.PAIR_FIRST))
    assert n_pairs == int(np.sum(s.multiplicity == Multiplicity.PAIR_SECOND))
    assert abs(n_pairs - n * p.p2) < 3 * math.sqrt(n * p.p2 * (1 - p.p2))

    second = np.flatnonzero(s.multiplicity == Multiplicity.PAIR_SECOND)
    assert np.all(s.pulse_index[second] == s.pulse_index[second - 1])
    assert np.all(s.t_emit[second] >= s.t_emit[second - 1])
    assert np.all(np.diff(s.pulse_index) >= 0)


def test_jitter_keeps_emission_after_pulse():
    p = EmitterParams(sigma_jitter=20e-12)
    s = generate_stream(p, 5000, 3)
    single = s.multiplicity == Multiplicity.SINGLE
    off = s.emission_offset[single]
    assert off.min() >= 0.0
    assert off.max() <= 6 * p.sigma_jitter + 1e-18
    assert off.mean() == pytest.approx(3 * p.sigma_jitter, rel=0.05)


def test_frequencies_follow_stationary_law():
    p = EmitterParams(tau_c=50e-9)
    s = generate_stream(p, 50_000, 9)
    assert abs(s.omega.mean()) < 0.1 * p.sigma_omega
    assert s.omega.std() == pytest.approx(p.sigma_omega, rel=0.1)


def test_records_iterate_in_order(params):
    s = generate_stream(params, 100, 1)
    records = list(s)
    assert len(records) == len(s)
    assert isinstance(records[0], PhotonRecord)
    assert records[-1].pulse_index == int(s.pulse_index[-1])


def test_invalid_pulse_count_raises(params):
    with pytest.raises(InvalidArgumentError):
        generate_stream(params, 0, 1)


def test_losses_thin_the_stream(params, seed):
    s = generate_stream(params, 20_000, seed)
    assert len(apply_losses(s, 1.0, seed)) == len(s)
    assert len(apply_losses(s, 0.0, seed)) == 0
    kept = len(apply_losses(s, 0.5, seed))
    assert abs(kept - 0.5 * len(s)) < 3 * math.sqrt(0.25 * len(s))
    with pytest.raises(InvalidArgumentError):
        apply_losses(s, 1.2, seed)


def test_default_single_photon_count_is_binomial(params, seed):
    n = 1_000_000
    s = generate_stream(params, n, seed)
    singles = int(np.sum(s.multiplicity == Multiplicity.SINGLE))
    assert abs(singles - params.p1 * n) < 3 * math.sqrt(n * params.p1 * (1 - params.p1))


def test_fiber_losses_give_budget_rate(seed):
    p = EmitterParams(p1=1.0, p2=0.0)
    n = 1_000_000
    kept = apply_losses(generate_stream(p, n, seed), p.eta_fiber, seed)
    rate = len(kept) * p.rep_rate / n
    sigma = math.sqrt(n * p.eta_fiber * (1 - p.eta_fiber)) * p.rep_rate / n
    assert fiber_rate(p) == pytest.approx(5.04e6, rel=1e-3)
    assert abs(rate - fiber_rate(p)) < 3 * sigma


def _pair_stream(params: EmitterParams, pulse_index, t_emit, multiplicity) -> PhotonStream:
    n = len(pulse_index)
    return PhotonStream(
        params=params,
        n_pulses=int(max(pulse_index)) + 1,
        pulse_index=np.asarray(pulse_index, dtype=np.int64),
        t_emit=np.asarray(t_emit, dtype=float),
        omega=np.zeros(n),
        multiplicity=np.asarray(multiplicity, dtype=np.int8),
    )


def test_pair_second_arrives_one_gap_after_its_partner(params):
    period = params.period
    s = _pair_stream(
        params,
        [0, 1, 1],
        [10e-12, period + 10e-12, period + 210e-12],
        [Multiplicity.SINGLE, Multiplicity.PAIR_FIRST, Multiplicity.PAIR_SECOND],
    )
    delays = np.array([100e-12, 150e-12, 400e-12])
    arrival = radiative_arrival(s, delays)
    assert arrival[0] == pytest.approx(110e-12)
    assert arrival[2] - arrival[1] == pytest.approx(200e-12)
    assert delays[2] == 400e-12


def test_orphaned_pair_second_keeps_its_own_delay(params):
    period = params.period
    s = _pair_stream(
        params,
        [0, 1],
        [10e-12, period + 210e-12],
        [Multiplicity.PAIR_FIRST, Multiplicity.PAIR_SECOND],
    )
    arrival = radiative_arrival(s, np.array([100e-12, 400e-12]))
    assert arrival[1] == pytest.approx(period + 610e-12)


def test_pair_arrival_gap_is_one_lifetime(params, seed):
    p = EmitterParams(p1=0.5, p2=0.5)
    s = generate_stream(p, 100_000, seed)
    delays = np.random.default_rng(seed).exponential(p.t1, len(s))
    arrival = radiative_arrival(s, delays)
    second = np.flatnonzero(s.multiplicity == Multiplicity.PAIR_SECOND)
    gap = arrival[second] - arrival[second - 1]
    assert gap.mean() == pytest.approx(p.t1, rel=0.02)
