from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import numpy as np
import pandas as pd

from qdstream.emitter.excitation import lifetime_histogram, purcell_lifetime, rabi_rate
from qdstream.emitter.params import EmitterParams
from qdstream.emitter.stream import PhotonStream, apply_losses, generate_stream
from qdstream.fitting.models import (
    Dataset1D,
    fit_exponential,
    fit_lorentzian,
    fit_rabi,
    fit_visibility_decay,
    fit_voigt,
)
from qdstream.instruments.hbt import g2_zero, hbt_histogram
from qdstream.instruments.histogram import CoincidenceHistogram
from qdstream.instruments.hom import (
    HomConfig,
    Polarization,
    delay_pulses_for,
    extract_visibility,
    hom_monte_carlo,
    multiphoton_background,
    side_peak_visibility,
)
from qdstream.instruments.interference import (
    mz_fringe_contrast,
    mz_fringe_scan,
    visibility_plateau,
    visibility_vs_separation,
)
from qdstream.io.load_config import read_config, validate_config, emitter_params_from_values
from qdstream.pipeline.budget import detected_rate
from qdstream.pipeline.run_config import RunConfig
from qdstream.reports.exports import write_csv, write_text
from qdstream.seeding import Stream, rng_for
from qdstream.spectra.fabry_perot import FabryPerotSpec, scan_spectrum
from qdstream.spectra.spectrum import add_noise, emitter_linewidths, emitter_spectrum
from qdstream.spectra.transforms import deconvolve_coherence, fit_coherence_time

FIGURE_IDS = ("1c", "1d", "2a", "2b", "2c", "3a", "3b", "3c")

STATISTICS_NOTE = (
    "Event counts are desk-scale: the run matches the statistics of each measurement, "
    "not its acquisition time."
)


@dataclass
class FigureOutcome:
    figure_id: str
    title: str
    tables: Dict[str, Tuple[pd.DataFrame, Dict[str, Any]]] = field(default_factory=dict)
    headline: Dict[str, Any] = field(default_factory=dict)
    lines: List[str] = field(default_factory=list)

    def summary_text(self, run: RunConfig) -> str:
        out = [
            f"figure {self.figure_id}: {self.title}",
            f"config_hash = {run.config_hash()}",
            f"seed = {run.seed}",
            "",
            *self.lines,
            "",
            STATISTICS_NOTE,
        ]
        return "\n".join(out) + "\n"


def _hist_frame(**histograms: CoincidenceHistogram) -> pd.DataFrame:
    first = next(iter(histograms.values()))
    df = pd.DataFrame({"bin_center_ps": first.centers * 1e12})
    for name, h in histograms.items():
        df[f"counts_{name}" if len(histograms) > 1 else "counts"] = h.counts
    return df


def _stream(run: RunConfig, params: EmitterParams, n_pulses: int) -> PhotonStream:
    return generate_stream(params, n_pulses, run.seed, workers=run.workers, chunk_pulses=run.chunk_pulses)


def reproduce_1c(run: RunConfig) -> FigureOutcome:
    opts = run.figure("1c")
    params = run.emitter
    n_points = int(opts.get("n_points", 41))
    t_int = float(opts.get("integration_time_s", 1e-3))
    power = np.linspace(0.0, float(opts.get("max_power_in_p_pi", 5.0)), n_points)
    r_max = detected_rate(params)

    rng = rng_for(run.seed, Stream.RABI_NOISE)
    counts = rng.poisson(rabi_rate(power, 1.0, r_max) * t_int)
    rate = counts / t_int
    err = np.sqrt(np.maximum(counts, 1)) / t_int
    fit = fit_rabi(Dataset1D(power, rate, err, x_unit="P/P_pi", y_unit="1/s"))

    df = pd.DataFrame({
        "power_in_p_pi": power,
        "rate_per_s": rate,
        "rate_err_per_s": err,
        "model_per_s": rabi_rate(power, fit.value("p_pi"), fit.value("r_max")),
    })
    out = FigureOutcome("1c", str(opts.get("title", "Rabi oscillation")))
    out.tables["fig1c_rabi.csv"] = (df, run.meta(n_points=n_points))
    out.tables["fig1c_fit.csv"] = (pd.DataFrame([fit.to_row()]), run.meta())
    out.headline.update(p_pi=fit.value("p_pi"), r_max=fit.value("r_max"))
    out.lines += [
        f"p_pi  = {fit.value('p_pi'):.4f} +/- {fit.error('p_pi'):.4f} (calibration units)",
        f"r_max = {fit.value('r_max'):.4e} +/- {fit.error('r_max'):.2e} counts/s (pi-pulse detected rate)",
    ]
    return out


def reproduce_1d(run: RunConfig) -> FigureOutcome:
    opts = run.figure("1d")
    n_pulses = int(opts.get("n_pulses", 10_000_000))
    eta = float(opts.get("eta", 1.0))
    params = run.emitter
    stream = _stream(run, params, n_pulses)
    if eta < 1.0:
        stream = apply_losses(stream, eta, run.seed)
    h = hbt_histogram(stream, n_pulses, run.seed, workers=run.workers, chunk_pulses=run.chunk_pulses)
    g2, g2_err = g2_zero(h)
    expected = 2.0 * params.p2 / params.mean_photon_number**2

    out = FigureOutcome("1d", str(opts.get("title", "HBT")))
    out.tables["fig1d_hbt.csv"] = (_hist_frame(hbt=h), run.meta(n_pulses=n_pulses, eta=eta))
    out.headline.update(g2_zero=g2, g2_zero_err=g2_err)
    out.lines += [
        f"g2(0) = {g2:.4f} +/- {g2_err:.4f}",
        f"small-p2 expectation 2*p2/(p1+2*p2)^2 = {expected:.4f}",
        f"measured: {opts.get('measured', 'g2(0) = 0.007(1)')}",
    ]
    return out


def _hom_pair(
    run: RunConfig, stream: PhotonStream, k: int, n_pulses: int
) -> Tuple[CoincidenceHistogram, CoincidenceHistogram, float]:
    """Parallel and cross histograms plus the multiphoton zero-delay background they share."""
    config = HomConfig(delay_pulses=k)
    kwargs = dict(workers=run.workers, chunk_pulses=run.chunk_pulses)
    h_par = hom_monte_carlo(stream, config, n_pulses, run.seed, **kwargs)
    h_cross = hom_monte_carlo(stream, config.with_polarization(Polarization.CROSS), n_pulses, run.seed, **kwargs)
    return h_par, h_cross, multiphoton_background(stream.params, config, n_pulses)


def _reproduce_hom(run: RunConfig, figure_id: str, default_k: int, default_pulses: int) -> FigureOutcome:
    opts = run.figure(figure_id)
    params = run.emitter
    k = int(opts.get("delay_pulses", default_k))
    n_pulses = int(opts.get("n_pulses", default_pulses))
    stream = _stream(run, params, n_pulses)
    h_par, h_cross, background = _hom_pair(run, stream, k, n_pulses)
    v, v_err = extract_visibility(h_par, h_cross, background=background)
    v_raw, v_raw_err = extract_visibility(h_par, h_cross)
    v_side, v_side_err = side_peak_visibility(h_par, h_cross)
    v_model = visibility_vs_separation(params, k * params.period)

    out = FigureOutcome(figure_id, str(opts.get("title", "HOM")))
    out.tables[f"fig{figure_id}_hom.csv"] = (
        _hist_frame(parallel=h_par, cross=h_cross),
        run.meta(n_pulses=n_pulses, delay_pulses=k),
    )
    out.headline.update(visibility=v, visibility_err=v_err, visibility_raw=v_raw, visibility_model=v_model)
    out.lines += [
        f"separation = {k * params.period * 1e9:.4g} ns (k = {k} pulses)",
        f"V (background removed) = {v:.4f} +/- {v_err:.4f}",
        f"V raw (1 - A_par/A_cross) = {v_raw:.4f} +/- {v_raw_err:.4f}",
        f"multiphoton background = {background:.1f} counts",
        f"V (side-peak normalized, diagnostic) = {v_side:.4f} +/- {v_side_err:.4f}",
        f"V model                = {v_model:.4f}",
        f"meeting events         = {h_cross.meta['n_meetings']}",
        f"measured: {opts.get('measured', '')}",
    ]
    return out


def reproduce_2a(run: RunConfig) -> FigureOutcome:
    return _reproduce_hom(run, "2a", 1, 1_000_000)


def reproduce_2b(run: RunConfig) -> FigureOutcome:
    return _reproduce_hom(run, "2b", 1123, 5_000_000)


def reproduce_2c(run: RunConfig) -> FigureOutcome:
    opts = run.figure("2c")
    params = run.emitter
    n_pulses = int(opts.get("n_pulses", 4_000_000))
    deltas = np.asarray(opts.get("delta_ns", [13.0, 289.0, 830.0, 1670.0, 5110.0, 14700.0]), dtype=float) * 1e-9
    stream = _stream(run, params, n_pulses)

    rows = []
    for delta in deltas:
        k = delay_pulses_for(delta, params)
        h_par, h_cross, background = _hom_pair(run, stream, k, n_pulses)
        v, v_err = extract_visibility(h_par, h_cross, background=background)
        rows.append({
            "delta_ns": k * params.period * 1e9,
            "k": k,
            "v_mc": v,
            "sigma_v": v_err,
            "v_model": visibility_vs_separation(params, k * params.period),
        })
    df = pd.DataFrame(rows)
    x = df["delta_ns"].to_numpy() * 1e-9
    fit_mc = fit_visibility_decay(Dataset1D(x, df["v_mc"].to_numpy(), df["sigma_v"].to_numpy(), x_unit="s"))
    fit_model = fit_visibility_decay(Dataset1D(x, df["v_model"].to_numpy(), x_unit="s"))
    plateau = visibility_plateau(params)

    fits = pd.DataFrame([{"source": "monte_carlo", **fit_mc.to_row()}, {"source": "model", **fit_model.to_row()}])
    out = FigureOutcome("2c", str(opts.get("title", "V versus separation")))
    out.tables["fig2c_visibility.csv"] = (df, run.meta(n_pulses=n_pulses))
    out.tables["fig2c_fit.csv"] = (fits, run.meta(n_pulses=n_pulses))
    out.headline.update(v_inf=fit_mc.value("v_inf"), tau_d=fit_mc.value("tau_d"), plateau_model=plateau)
    out.lines += [f"{r['delta_ns']:10.1f} ns  V = {r['v_mc']:.4f} +/- {r['sigma_v']:.4f}  model {r['v_model']:.4f}"
                  for r in rows]
    out.lines += [
        "",
        f"fit (MC):    v_inf = {fit_mc.value('v_inf'):.4f} +/- {fit_mc.error('v_inf'):.4f}, "
        f"tau_d = {fit_mc.value('tau_d') * 1e6:.3f} +/- {fit_mc.error('tau_d') * 1e6:.3f} us",
        f"fit (model): v_inf = {fit_model.value('v_inf'):.4f}, tau_d = {fit_model.value('tau_d') * 1e6:.3f} us",
        f"plateau (full frequency decorrelation) = {plateau:.4f}",
        f"measured: {opts.get('measured', '')}",
    ]
    return out


def reproduce_3a(run: RunConfig) -> FigureOutcome:
    opts = run.figure("3a")
    params = run.emitter
    n_events = int(opts.get("n_events", 1_000_000))
    out = FigureOutcome("3a", str(opts.get("title", "Lifetime")))
    taus = {}
    for name, detuned in (("resonant", False), ("detuned", True)):
        h = lifetime_histogram(params, n_events, detuned, run.seed)
        fit = fit_exponential(Dataset1D.from_histogram(h))
        taus[name] = (fit.value("tau"), fit.error("tau"))
        df = _hist_frame(lifetime=h)
        df["model"] = fit.values[0] * np.exp(-h.centers / fit.values[1]) + fit.values[2]
        out.tables[f"fig3a_{name}.csv"] = (df, run.meta(n_events=n_events, detuned=detuned))
        out.tables[f"fig3a_{name}_fit.csv"] = (pd.DataFrame([fit.to_row()]), run.meta(n_events=n_events))
        out.lines.append(
            f"{name:<9s} tau = {taus[name][0] * 1e12:.2f} +/- {taus[name][1] * 1e12:.2f} ps "
            f"(input {purcell_lifetime(params, detuned) * 1e12:.1f} ps)"
        )
    ratio = taus["detuned"][0] / taus["resonant"][0]
    out.headline.update(t1_resonant=taus["resonant"][0], t1_detuned=taus["detuned"][0], purcell_ratio=ratio)
    out.lines += [f"lifetime ratio = {ratio:.3f}", f"measured: {opts.get('measured', '')}"]
    return out


def reproduce_3b(run: RunConfig) -> FigureOutcome:
    opts = run.figure("3b")
    params = run.emitter
    taus = np.arange(0.0, float(opts.get("tau_max_ps", 600.0)) + 1e-9, float(opts.get("tau_step_ps", 20.0))) * 1e-12
    scan = mz_fringe_scan(params, taus, float(opts.get("counts_per_point", 100_000)), run.seed)
    fit = fit_exponential(Dataset1D(scan.tau, scan.contrast, scan.contrast_err, x_unit="s"), baseline=False)
    t2 = fit.value("tau")

    df = pd.DataFrame({
        "tau_ps": taus * 1e12,
        "contrast": scan.contrast,
        "contrast_err": scan.contrast_err,
        "model_contrast": mz_fringe_contrast(params, taus),
        "fit_contrast": fit.values[0] * np.exp(-taus / t2),
    })
    out = FigureOutcome("3b", str(opts.get("title", "Fringe contrast")))
    out.tables["fig3b_fringe.csv"] = (df, run.meta())
    out.tables["fig3b_fit.csv"] = (pd.DataFrame([fit.to_row()]), run.meta())
    out.headline.update(t2_eff=t2, t2_eff_err=fit.error("tau"), t2_over_2t1=t2 / (2.0 * params.t1))
    out.lines += [
        f"T2_eff = {t2 * 1e12:.1f} +/- {fit.error('tau') * 1e12:.1f} ps",
        f"T2_eff / 2T1 = {t2 / (2.0 * params.t1):.3f}",
        f"homogeneous t2_hom = {params.t2_hom * 1e12:.1f} ps",
        f"measured: {opts.get('measured', '')}",
    ]
    return out


def _spectral_params(run: RunConfig, preset: str) -> EmitterParams | None:
    if not preset or run.configs_dir is None:
        return None
    path = Path(run.configs_dir) / preset
    parsed = read_config(path)
    if validate_config(parsed)["summary"]["errors"]:
        return None
    return emitter_params_from_values(parsed.values, base=run.emitter)


def reproduce_3c(run: RunConfig) -> FigureOutcome:
    opts = run.figure("3c")
    fp = FabryPerotSpec()
    noise = float(opts.get("noise", 0.01))
    cases = [("config", run.emitter)]
    preset = _spectral_params(run, str(opts.get("spectral_preset", "")))
    if preset is not None:
        cases.append(("voigt_linewidths", preset))

    out = FigureOutcome("3c", str(opts.get("title", "Fabry-Perot scan")))
    fit_rows = []
    for label, params in cases:
        measured = scan_spectrum(emitter_spectrum(params), fp)
        noisy, sigma = add_noise(measured, noise, run.seed)
        data = Dataset1D(measured.nu_grid, noisy, np.full(len(noisy), sigma), x_unit="Hz")
        voigt_fit = fit_voigt(data, fp.fwhm)
        lorentz_fit = fit_lorentzian(data, fp.fwhm)
        t2_fit = fit_coherence_time(deconvolve_coherence(measured, fp))
        fwhm_l, fwhm_g = emitter_linewidths(params)

        df = measured.to_frame()
        df["noisy_per_GHz"] = noisy * 1e9
        df["voigt_fit_per_GHz"] = (data.y - voigt_fit.residuals) * 1e9
        df["lorentzian_fit_per_GHz"] = (data.y - lorentz_fit.residuals) * 1e9
        meta = run.meta(case=label, params_hash=params.config_hash(), instrument_fwhm_hz=fp.fwhm,
                        lorentzian_width="intrinsic, instrument width subtracted")
        out.tables[f"fig3c_{label}_spectrum.csv"] = (df, meta)
        fit_rows += [{"case": label, **voigt_fit.to_row()}, {"case": label, **lorentz_fit.to_row()}]
        fit_rows.append({"case": label, **t2_fit.to_row(), "model": "deconvolved_coherence"})

        out.headline[label] = {
            "fwhm_l": voigt_fit.value("fwhm_l"),
            "fwhm_g": voigt_fit.value("fwhm_g"),
            "t2": t2_fit.value("tau"),
        }
        out.lines += [
            f"[{label}] input widths: Lorentzian {fwhm_l * 1e-9:.3f} GHz, Gaussian {fwhm_g * 1e-9:.3f} GHz",
            f"[{label}] Voigt fit: fwhm_l = {voigt_fit.value('fwhm_l') * 1e-9:.3f} +/- {voigt_fit.error('fwhm_l') * 1e-9:.3f} GHz, "
            f"fwhm_g = {voigt_fit.value('fwhm_g') * 1e-9:.3f} +/- {voigt_fit.error('fwhm_g') * 1e-9:.3f} GHz "
            f"(chi2_red {voigt_fit.chi2_reduced:.3f}; Lorentzian {lorentz_fit.chi2_reduced:.3f})",
            f"[{label}] deconvolved T2 = {t2_fit.value('tau') * 1e12:.1f} +/- {t2_fit.error('tau') * 1e12:.1f} ps",
        ]
    out.tables["fig3c_fits.csv"] = (pd.DataFrame(fit_rows), run.meta(instrument_fwhm_hz=fp.fwhm))
    out.lines += [
        f"instrument: finesse {fp.finesse:g}, FSR {fp.fsr * 1e-9:g} GHz, linewidth {fp.fwhm * 1e-6:.0f} MHz",
        f"measured: {opts.get('measured', '')}",
    ]
    return out


REPRODUCERS: Dict[str, Callable[[RunConfig], FigureOutcome]] = {
    "1c": reproduce_1c,
    "1d": reproduce_1d,
    "2a": reproduce_2a,
    "2b": reproduce_2b,
    "2c": reproduce_2c,
    "3a": reproduce_3a,
    "3b": reproduce_3b,
    "3c": reproduce_3c,
}


def write_outcome(outcome: FigureOutcome, run: RunConfig) -> List[Path]:
    out_dir = run.output_dir / f"fig{outcome.figure_id}"
    written = []
    for name, (df, meta) in outcome.tables.items():
        write_csv(out_dir / name, df, meta)
        written.append(out_dir / name)
    write_text(out_dir / "summary.txt", outcome.summary_text(run))
    written.append(out_dir / "summary.txt")
    return written


def cmd_reproduce(figure_id: str, run: RunConfig) -> List[FigureOutcome]:
    """Compute every requested figure first, then write; a failing figure leaves no files behind."""
    ids = list(FIGURE_IDS) if figure_id == "all" else [figure_id]
    outcomes = [REPRODUCERS[i](run) for i in ids]
    for outcome in outcomes:
        write_outcome(outcome, run)
    return outcomes
