from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import trapezoid

from qdstream.emitter.params import EmitterParams
from qdstream.errors import DeconvolutionUnstableError
from qdstream.fitting.models import Dataset1D, fit_voigt
from qdstream.pipeline.sweep import t2_eff
from qdstream.spectra.fabry_perot import FabryPerotSpec, scan_spectrum
from qdstream.spectra.profiles import FWHM_PER_SIGMA, gaussian, lorentzian
from qdstream.spectra.spectrum import Spectrum, add_noise, emitter_spectrum, make_grid
from qdstream.spectra.transforms import (
    CoherenceTrace,
    coherence_function,
    coherence_time_from_spectrum,
    convolve,
    deconvolve_coherence,
    fit_coherence_time,
)


def test_coherence_starts_at_one_and_decays(params):
    g = coherence_function(emitter_spectrum(params), np.linspace(0, 1e-9, 11))
    assert g[0] == pytest.approx(1.0)
    assert np.all(np.diff(g) < 0)


def test_without_instrument_deconvolution_is_identity(params):
    s = emitter_spectrum(params)
    trace = deconvolve_coherence(s, None)
    np.testing.assert_array_equal(trace.intrinsic, trace.measured)
    assert trace.guard.all()


def test_instrument_guard_limits_the_window():
    fp = FabryPerotSpec(finesse=20)
    taus = np.linspace(0, 2e-9, 201)
    trace = deconvolve_coherence(emitter_spectrum(EmitterParams()), fp, taus)
    cutoff = np.log(10) / (np.pi * fp.fwhm)
    assert not trace.guard[taus > cutoff].any()
    assert trace.guard[taus < cutoff].all()


def test_unstable_deconvolution_raises():
    taus = np.linspace(0, 1e-9, 11)
    trace = CoherenceTrace(
        tau=taus,
        measured=np.full(11, 0.5),
        instrument=np.full(11, 0.01),
        intrinsic=np.full(11, 50.0),
        guard=np.zeros(11, dtype=bool),
    )
    with pytest.raises(DeconvolutionUnstableError):
        fit_coherence_time(trace)


def test_deconvolved_coherence_time_matches_fringe_fit(params):
    measured = scan_spectrum(emitter_spectrum(params), FabryPerotSpec())
    t2 = coherence_time_from_spectrum(measured, FabryPerotSpec())
    assert t2 == pytest.approx(291e-12, abs=15e-12)
    t2_fringe, _ = t2_eff(params)
    assert t2_fringe == pytest.approx(294e-12, abs=15e-12)
    assert t2_fringe / (2 * params.t1) == pytest.approx(0.91, abs=0.05)
    assert abs(t2 - t2_fringe) <= 0.05 * t2_fringe


@pytest.mark.slow
def test_voigt_fit_recovers_intrinsic_widths(seed):
    fp = FabryPerotSpec()
    measured = scan_spectrum(emitter_spectrum(EmitterParams.voigt_linewidths()), fp)
    noisy, sigma = add_noise(measured, 0.01, seed)
    fit = fit_voigt(Dataset1D(measured.nu_grid, noisy, np.full(len(noisy), sigma)), fp.fwhm)
    assert fit.value("fwhm_l") == pytest.approx(1.01e9, abs=0.05e9)
    assert fit.value("fwhm_g") == pytest.approx(0.75e9, abs=0.08e9)
    assert fit.chi2_reduced == pytest.approx(1.0, abs=0.2)


def _profile(values: np.ndarray, nu: np.ndarray) -> Spectrum:
    return Spectrum.from_values(nu, values)


def _l2(a: Spectrum, b: Spectrum) -> float:
    return float(np.sqrt(trapezoid((a.intensity - b.intensity) ** 2, a.nu_grid) / trapezoid(a.intensity**2, a.nu_grid)))


def test_convolving_with_a_delta_is_identity(params):
    nu = make_grid(10e6, 25e9)
    delta = np.zeros(len(nu))
    delta[len(nu) // 2] = 1.0
    line = emitter_spectrum(params, nu)
    out = convolve(line, _profile(delta, nu))
    np.testing.assert_allclose(out.intensity, line.intensity, rtol=0, atol=1e-12 * line.intensity.max())


def test_lorentzian_widths_add():
    nu = make_grid(5e6, 50e9)
    out = convolve(_profile(lorentzian(nu, 1.01e9), nu), _profile(lorentzian(nu, 0.22e9), nu))
    assert out.fwhm() == pytest.approx(1.23e9, rel=0.01)


def test_gaussian_variances_add():
    nu = make_grid(5e6, 25e9)
    out = convolve(_profile(gaussian(nu, 1.0e9), nu), _profile(gaussian(nu, 2.0e9), nu))
    variance = trapezoid(nu**2 * out.intensity, nu)
    assert variance == pytest.approx((1.0e9**2 + 2.0e9**2) / FWHM_PER_SIGMA**2, rel=0.01)


def test_convolution_commutes_and_associates():
    nu = make_grid(10e6, 25e9)
    a = _profile(gaussian(nu, 0.5e9), nu)
    b = _profile(gaussian(nu - 0.3e9, 1.0e9), nu)
    c = _profile(gaussian(nu + 0.2e9, 1.5e9), nu)
    assert _l2(convolve(a, b), convolve(b, a)) <= 1e-6
    assert _l2(convolve(convolve(a, b), c), convolve(a, convolve(b, c))) <= 1e-6


def test_reconvolved_coherence_reproduces_measurement(params):
    fp = FabryPerotSpec()
    trace = deconvolve_coherence(scan_spectrum(emitter_spectrum(params), fp), fp)
    inside = trace.guard
    residual = trace.intrinsic[inside] * trace.instrument[inside] - trace.measured[inside]
    assert math.sqrt(np.mean(residual**2)) <= 1e-4


def test_transform_limited_line_width():
    p = EmitterParams(gamma_pd=0.0, sigma_omega=0.0)
    s = emitter_spectrum(p)
    assert s.fwhm() == pytest.approx(0.98e9, abs=0.01e9)
    assert s.fwhm() == pytest.approx(1 / (2 * math.pi * p.t1), rel=5e-3)


def test_narrow_instrument_limit_matches_direct_coherence_time(params):
    line = emitter_spectrum(params)
    sharp = FabryPerotSpec(finesse=1e4)
    direct = coherence_time_from_spectrum(line, None)
    assert coherence_time_from_spectrum(scan_spectrum(line, sharp), sharp) == pytest.approx(direct, rel=0.01)


def test_pure_lorentzian_coherence_time_round_trips():
    p = EmitterParams(sigma_omega=0.0)
    fp = FabryPerotSpec()
    measured = scan_spectrum(emitter_spectrum(p, make_grid(20e6, 200e9)), fp)
    assert coherence_time_from_spectrum(measured, fp) == pytest.approx(p.t2_hom, rel=0.02)
