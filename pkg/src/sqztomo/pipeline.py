"""End-to-end runs: simulate, reconstruct, analyze.

Output directory layout::

    config.cfg              the effective run configuration
    signal.sqz vacuum.sqz   broadband traces
    states/index.json       band list, band 0 marked discarded
    states/band_NN.json     density matrix, photon statistics, Wigner checks
    tomograms/band_NN.csv   phase-resolved quadrature histograms
    wigner/band_NN_*.csv    back-projected and Fock-synthesized Wigner grids
    report.json, *.csv, *.svg
"""

from __future__ import annotations

import csv
import datetime
import io as _io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, plots
from .config import RunConfig
from .core import CalibrationError, SqueezingSpectrum, WignerGrid, to_decibel
from .io import CONVENTIONS, TraceFormatError, read_document, read_trace, to_document, \
    write_document, write_trace
from .opa import band_variances, simulate_trace, simulate_vacuum_trace
from .spectral import (BandDecomposition, decompose_and_calibrate, remove_bands,
                       spectral_flatten)
from .tomography.states import (estimate_density_matrix, has_parity_oscillation,
                                kernel_for, photon_distribution)
from .tomography.wigner import marginal_histogram, wigner_backprojection, wigner_from_density

SIGNAL_FILE = "signal.sqz"
VACUUM_FILE = "vacuum.sqz"
DISCARD_REASON = "low-frequency technical noise"


class DataError(RuntimeError):
    """Missing, unreadable or inconsistent input data."""


def _stamp(cfg: RunConfig, deterministic: bool) -> dict:
    out = {"config_hash": cfg.hash(), "conventions": CONVENTIONS}
    if not deterministic:
        out["created"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return out


def _write_csv(path, header, rows):
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    Path(path).write_text(buf.getvalue())
    return Path(path)


# --- simulate -------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out) -> tuple[Path, Path]:
    """Write the signal and vacuum traces for ``cfg`` into ``out``."""
    out = Path(out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.cfg")
        sig = simulate_trace(cfg.opa, cfg.acquisition, cfg.seed)
        vac = simulate_vacuum_trace(cfg.acquisition, cfg.seed)
        return write_trace(out / SIGNAL_FILE, sig), write_trace(out / VACUUM_FILE, vac)
    except OSError as exc:
        raise DataError(f"cannot write traces to {out}: {exc}") from exc


def load_traces(cfg: RunConfig, out, signal=None, vacuum=None):
    out = Path(out)
    sig_path = Path(signal) if signal else out / SIGNAL_FILE
    vac_path = Path(vacuum) if vacuum else out / VACUUM_FILE
    if not sig_path.exists():
        raise DataError(f"signal trace not found: {sig_path}")
    if not vac_path.exists():
        raise CalibrationError(f"vacuum trace required for calibration is missing: {vac_path}")
    n_bands = cfg.acquisition.n_bands
    try:
        sig = read_trace(sig_path, n_bands=n_bands, adc_bits=cfg.acquisition.adc_bits)
        vac = read_trace(vac_path, n_bands=n_bands, adc_bits=cfg.acquisition.adc_bits)
    except TraceFormatError as exc:
        raise DataError(str(exc)) from exc
    want = cfg.acquisition
    for path, tr in ((sig_path, sig), (vac_path, vac)):
        got = tr.config
        if (got.sample_rate, got.n_samples, got.sweep_period, got.phase_offset) != \
                (want.sample_rate, want.n_samples, want.sweep_period, want.phase_offset):
            raise DataError(f"{path}: acquisition settings do not match the configuration")
    return sig, vac


# --- reconstruct ----------------------------------------------------------

def _wigner_half_width(cfg: RunConfig, tomogram) -> float:
    if cfg.tomography.wigner_half_width > 0:
        return cfg.tomography.wigner_half_width
    sigma = math.sqrt(float(tomogram.column_variance().max()))
    return float(max(4.0, math.ceil(4.5 * sigma)))


def _grid_csv(path, grid):
    rows = ([p] + list(row) for p, row in zip(grid.p, grid.values))
    return _write_csv(path, ["p\\x"] + [repr(float(v)) for v in grid.x], rows)


def reconstruct_band(samples, cfg: RunConfig):
    """Density matrix, tomogram and both Wigner functions of one band."""
    t = cfg.tomography
    kernel = kernel_for(t.n_max, float(np.max(np.abs(samples.x))))
    rho = estimate_density_matrix(samples, t.n_max, kernel=kernel)
    tomo = marginal_histogram(samples, t.phase_bins, t.x_bins)
    half = _wigner_half_width(cfg, tomo)
    grid = np.linspace(-half, half, t.wigner_points)
    w_bp = wigner_backprojection(tomo, t.k_c, grid, grid)
    w_fock = wigner_from_density(rho, grid, grid)
    return rho, tomo, w_bp, w_fock


def cmd_reconstruct(cfg: RunConfig, out, signal=None, vacuum=None,
                    deterministic: bool = False) -> list[Path]:
    """Per-band state documents for the configured bands; band 0 is marked discarded."""
    out = Path(out)
    sig, vac = load_traces(cfg, out, signal, vacuum)
    dec = decompose_and_calibrate(sig, vac)
    bands = [b for b in cfg.band_list if b not in dec.discarded]
    for sub in ("states", "tomograms", "wigner"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    stamp = _stamp(cfg, deterministic)
    n_bands = cfg.acquisition.n_bands

    def job(b):
        return b, reconstruct_band(dec.band(b), cfg)

    # warm the shared kernel cache before threads start
    if bands:
        kernel_for(cfg.tomography.n_max, max(float(np.max(np.abs(dec.band(b).x))) for b in bands))
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        results = list(pool.map(job, bands))
    written, index = [], []
    for b in sorted(dec.discarded):
        index.append({"band_index": int(b), "discarded": True, "reason": DISCARD_REASON})
    for b, (rho, tomo, w_bp, w_fock) in results:
        name = f"band_{b:02d}"
        tomo_rows = ([th] + list(row) for th, row in zip(tomo.theta, tomo.counts))
        _write_csv(out / "tomograms" / f"{name}.csv",
                   ["theta\\x"] + [repr(float(v)) for v in tomo.x], tomo_rows)
        _grid_csv(out / "wigner" / f"{name}_backprojection.csv", w_bp)
        _grid_csv(out / "wigner" / f"{name}_fock.csv", w_fock)
        pd = photon_distribution(rho)
        scale = float(np.abs(w_fock.values).max())
        doc = {"type": "BandState", "band_index": b, "discarded": False,
               "center_frequency_hz": float(dec.band(b).center_frequency / (2 * math.pi)),
               "n_samples": len(dec.band(b)), "vacuum_scale": float(dec.scales[b]),
               "density_matrix": to_document(rho),
               "trace": rho.trace, "mean_photon_number": rho.mean_photon_number,
               "fidelity_to_vacuum": rho.fidelity_to_fock(0),
               "photon_distribution": [float(v) for v in pd.probabilities],
               "clipped_mass": pd.clipped_mass, "trace_flagged": pd.flagged,
               "wigner": {"k_c": cfg.tomography.k_c, "half_width": float(w_bp.x[-1]),
                          "points": len(w_bp.x),
                          "integral_backprojection": w_bp.integral(),
                          "integral_fock": w_fock.integral(),
                          "origin_backprojection": w_bp.at(0.0, 0.0),
                          "rms_difference_rel": float(
                              np.sqrt(np.mean((w_bp.values - w_fock.values) ** 2)) / scale)},
               **stamp}
        written.append(write_document(out / "states" / f"{name}.json", doc))
        index.append({"band_index": b, "discarded": False, "document": f"states/{name}.json"})
    index.sort(key=lambda e: e["band_index"])
    write_document(out / "states" / "index.json",
                   {"type": "StateIndex", "n_bands": n_bands, "bands": index, **stamp})
    return written


# --- analyze --------------------------------------------------------------

def _restrict(dec: BandDecomposition, bands) -> BandDecomposition:
    keep = set(bands)
    return replace(dec, discarded=dec.discarded | {b.band_index for b in dec.bands
                                                    if b.band_index not in keep})


def _spectrum_section(cfg, spec: SqueezingSpectrum):
    model_lo, model_hi = band_variances(cfg.opa, spec.omega)
    rows = []
    for i in range(spec.omega.size):
        rows.append({"band_index": int(spec.band_index[i]),
                     "frequency_hz": float(spec.frequency_hz[i]),
                     "v_min": float(spec.v_min[i]), "v_max": float(spec.v_max[i]),
                     "v_min_db": to_decibel(float(spec.v_min[i])),
                     "v_max_db": to_decibel(float(spec.v_max[i])),
                     "model_v_min": float(model_lo[i]), "model_v_max": float(model_hi[i]),
                     "flagged": bool(spec.flagged[i])})
    return rows


def cmd_analyze(cfg: RunConfig, out, signal=None, vacuum=None,
                deterministic: bool = False) -> Path:
    """Spectrum fit, totals, photon statistics and g1, written as JSON, CSV and SVG.

    Missing inputs leave the corresponding report sections empty and listed
    under ``gaps``.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    a = cfg.analysis
    report = {"type": "AnalysisReport", **_stamp(cfg, deterministic),
              "configured": {"pump_parameter": cfg.opa.pump_parameter,
                             "efficiency": cfg.opa.efficiency,
                             "cavity_linewidth_hz": cfg.opa.cavity_hwhm / (2 * math.pi),
                             "seed": cfg.seed},
              "gaps": []}
    try:
        sig, vac = load_traces(cfg, out, signal, vacuum)
    except (DataError, CalibrationError) as exc:
        sig = vac = None
        report["gaps"].append({"section": "traces", "reason": str(exc)})

    if sig is not None and len(cfg.band_list) < 2:
        report["gaps"].append({"section": "spectrum", "reason": "fewer than two bands selected"})
    elif sig is not None:
        dec = _restrict(decompose_and_calibrate(sig, vac), cfg.band_list)
        spec = analysis.squeezing_spectrum(dec, a.phase_bins)
        report["spectrum"] = _spectrum_section(cfg, spec)
        _write_csv(out / "spectrum.csv",
                   ["band", "frequency_hz", "v_min", "v_max", "v_min_db", "v_max_db"],
                   ([r["band_index"], r["frequency_hz"], r["v_min"], r["v_max"], r["v_min_db"],
                     r["v_max_db"]] for r in report["spectrum"]))
        fine = np.linspace(0, cfg.acquisition.sample_rate / 2, 301)
        m_lo, m_hi = band_variances(cfg.opa, 2 * math.pi * fine)
        plots.plot_spectrum(out / "spectrum.svg", spec.frequency_hz / 1e6, spec.v_min,
                            spec.v_max, fine / 1e6, m_lo, m_hi)
        try:
            fit = analysis.fit_spectrum(spec, cfg.opa.cavity_hwhm, fit_gamma=a.fit_gamma)
            report["fit"] = {"pump_parameter": fit.pump_parameter, "efficiency": fit.efficiency,
                             "cavity_linewidth_hz": fit.cavity_hwhm / (2 * math.pi),
                             "stderr": [float(v) for v in fit.stderr],
                             "residual_norm": fit.residual_norm,
                             "gamma_fitted": fit.gamma_fitted}
        except (analysis.FitError, ValueError) as exc:
            report["gaps"].append({"section": "fit", "reason": str(exc)})

        flux = analysis.mean_photon_and_flux(spec)
        report["photon_flux"] = {"mean_photons_per_mode": flux.mean_photons,
                                 "bandwidth_hz": flux.bandwidth, "flux_per_s": flux.flux,
                                 "power_w": flux.power}

        flat = spectral_flatten(sig, vac)
        flat_vac = spectral_flatten(vac, vac)
        removed = sorted(set(range(cfg.acquisition.n_bands)) - set(cfg.band_list))
        total = analysis.total_variance_vs_phase(remove_bands(flat, removed), a.phase_bins,
                                                 removed_bands=removed)
        report["total_variance"] = {"v_min": total.v_min, "v_max": total.v_max,
                                    "v_min_db": total.min_db, "v_max_db": total.max_db,
                                    "bands": list(cfg.band_list)}
        model = total.curve.model(total.theta) / total.vacuum_level
        _write_csv(out / "total_variance.csv", ["theta", "variance", "fit"],
                   zip(total.theta, total.variance, model))
        plots.plot_total_variance(out / "total_variance.svg", total.theta, total.variance, model)

        g1 = analysis.g1_estimate(flat, flat_vac, a.max_lag)
        gamma = cfg.opa.cavity_hwhm
        theory = analysis.g1_theory(cfg.opa.pump_parameter, gamma, g1.tau)
        window = g1.valid & (g1.tau <= 5 / gamma)
        report["g1"] = {"normalization": g1.normalized_to,
                        "rms_vs_model": float(np.sqrt(np.mean((g1.values[window]
                                                               - theory[window]) ** 2))),
                        "at_one_over_gamma": float(g1.at(1 / gamma)),
                        "model_at_one_over_gamma": analysis.g1_theory(
                            cfg.opa.pump_parameter, gamma, 1 / gamma)}
        _write_csv(out / "g1.csv", ["tau_s", "g1", "model", "valid"],
                   ([t, v, m, int(ok)] for t, v, m, ok in zip(g1.tau, g1.values, theory,
                                                             g1.valid)))
        plots.plot_g1(out / "g1.svg", g1.tau[g1.valid] * 1e9, g1.values[g1.valid],
                      theory[g1.valid])

    states = _load_states(cfg, out, report["gaps"])
    if states:
        report["bands"] = [{"band_index": d["band_index"], "trace": d["trace"],
                            "mean_photon_number": d["mean_photon_number"],
                            "p0": d["photon_distribution"][0],
                            "wigner_rms_difference_rel": d["wigner"]["rms_difference_rel"]}
                           for d in states]
        if len(states) == len(cfg.band_list):
            totals = analysis.total_photon_statistics(
                [d["photon_distribution"] for d in states], a.photon_length)
            report["photon_statistics"] = {"tail_mass": totals.tail_mass,
                                           "mean": totals.mean,
                                           "parity_oscillation": has_parity_oscillation(
                                               totals.probabilities)}
            _write_csv(out / "photon_total.csv", ["n", "probability"],
                       enumerate(totals.probabilities))
            plots.plot_photon_statistics(out / "photon_statistics.svg", totals.probabilities)
        grids = {}
        for d in states:
            path = out / "wigner" / f"band_{d['band_index']:02d}_backprojection.csv"
            if path.exists():
                grids[d["band_index"]] = _read_grid(path)
        if grids:
            plots.plot_wigner_panels(out / "wigner.svg", grids)
    return write_document(out / "report.json", report)


def _load_states(cfg, out, gaps):
    states = []
    missing = []
    for b in cfg.band_list:
        path = out / "states" / f"band_{b:02d}.json"
        if not path.exists():
            missing.append(b)
            continue
        states.append(read_document(path))
    if missing:
        gaps.append({"section": "states", "reason": "state documents missing",
                     "bands": missing})
    return states


def _read_grid(path):
    rows = list(csv.reader(Path(path).read_text().splitlines()))
    x = np.array([float(v) for v in rows[0][1:]])
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return WignerGrid(x, data[:, 0], data[:, 1:])


def run_all(cfg: RunConfig, out, deterministic: bool = False) -> Path:
    cmd_simulate(cfg, out)
    cmd_reconstruct(cfg, out, deterministic=deterministic)
    return cmd_analyze(cfg, out, deterministic=deterministic)


__all__ = ["DataError", "cmd_simulate", "cmd_reconstruct", "cmd_analyze", "run_all",
           "load_traces", "reconstruct_band"]
