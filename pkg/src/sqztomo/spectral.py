"""Fourier band decomposition, vacuum calibration and phase tagging."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import uniform_filter1d

from .core import (VACUUM_VARIANCE, AcquisitionConfig, BroadbandTrace, CalibrationError,
                   QuadratureSamples, band_center)


def band_bin_edges(n_samples: int, n_bands: int) -> np.ndarray:
    """rfft bin boundaries of ``n_bands`` contiguous bands.

    Boundaries are floored; the last band absorbs the remainder and the
    Nyquist bin. The DC bin belongs to band 0.
    """
    if n_bands < 1 or n_samples < 2 * n_bands:
        raise ValueError("need n_samples >= 2 * n_bands")
    half = n_samples // 2
    edges = (np.arange(n_bands + 1) * half) // n_bands
    edges[-1] = half + 1
    return edges


def band_weights(n_samples: int, n_bands: int, taper_bins: int = 0) -> np.ndarray:
    """Per-band rfft weights, shape (n_bands, n_rfft), summing to one in every bin.

    ``taper_bins = 0`` gives ideal brick-wall bands; otherwise adjacent bands
    cross over with complementary sin²/cos² edges ``taper_bins`` wide.
    """
    edges = band_bin_edges(n_samples, n_bands)
    n_rfft = n_samples // 2 + 1
    k = np.arange(n_rfft)
    w = np.zeros((n_bands, n_rfft))
    if taper_bins <= 0:
        for b in range(n_bands):
            w[b, edges[b]:edges[b + 1]] = 1.0
        return w
    # fraction of each bin that lies above each inner edge
    above = np.ones((n_bands + 1, n_rfft))
    above[0] = 1.0
    above[n_bands] = 0.0
    for j in range(1, n_bands):
        u = np.clip((k - edges[j] + 0.5) / taper_bins + 0.5, 0.0, 1.0)
        above[j] = np.sin(0.5 * np.pi * u) ** 2
    for b in range(n_bands):
        w[b] = above[b] - above[b + 1]
    return w


@dataclass(frozen=True, eq=False)
class BandTrace:
    """Real time series of one spectral band at the full sample rate."""

    band_index: int
    samples: np.ndarray
    config: AcquisitionConfig


def band_decompose(trace: BroadbandTrace, n_bands: int | None = None,
                   taper_bins: int = 0) -> list[BandTrace]:
    """Split a trace into real band traces by masking its Fourier transform."""
    n_bands = trace.config.n_bands if n_bands is None else n_bands
    n = trace.config.n_samples
    spec = np.fft.rfft(trace.samples)
    weights = band_weights(n, n_bands, taper_bins)
    config = trace.config if n_bands == trace.config.n_bands else replace(trace.config, n_bands=n_bands)
    return [BandTrace(b, np.fft.irfft(spec * weights[b], n=n), config) for b in range(n_bands)]


def remove_bands(trace: BroadbandTrace, bands, n_bands: int | None = None) -> BroadbandTrace:
    """Zero the Fourier content of ``bands``."""
    n_bands = trace.config.n_bands if n_bands is None else n_bands
    n = trace.config.n_samples
    edges = band_bin_edges(n, n_bands)
    spec = np.fft.rfft(trace.samples)
    for b in bands:
        spec[edges[b]:edges[b + 1]] = 0.0
    return trace.replace_samples(np.fft.irfft(spec, n=n))


def retained_fraction(n_samples: int, n_bands: int, removed=(0,)) -> float:
    """Fraction of a unit-density white spectrum's power left after ``remove_bands``."""
    edges = band_bin_edges(n_samples, n_bands)
    n_rfft = n_samples // 2 + 1
    weight = np.full(n_rfft, 2.0)
    weight[0] = 1.0
    if n_samples % 2 == 0:
        weight[-1] = 1.0
    lost = sum(weight[edges[b]:edges[b + 1]].sum() for b in removed)
    return float((n_samples - lost) / n_samples)


def spectral_flatten(signal: BroadbandTrace, vacuum: BroadbandTrace, window: int = 64,
                     floor: float = 1e-9, return_mask: bool = False):
    """Divide the signal spectrum by the smoothed vacuum amplitude spectrum.

    A vacuum trace flattened by itself ends up with unit spectral density,
    i.e. unit variance per sample. Bins where the smoothed vacuum density is
    below ``floor`` times its median are zeroed rather than divided.
    """
    if signal.config.n_samples != vacuum.config.n_samples or \
            signal.config.sample_rate != vacuum.config.sample_rate:
        raise CalibrationError("signal and vacuum traces have different acquisition settings")
    n = signal.config.n_samples
    s_spec = np.fft.rfft(signal.samples)
    v_power = np.abs(np.fft.rfft(vacuum.samples)) ** 2 / n
    if window > 1:
        v_power = uniform_filter1d(v_power, size=window, mode="nearest")
    bad = v_power <= floor * np.median(v_power)
    scale = np.zeros_like(v_power)
    scale[~bad] = 1.0 / np.sqrt(v_power[~bad])
    out = signal.replace_samples(np.fft.irfft(s_spec * scale, n=n))
    return (out, bad) if return_mask else out


def attach_phase(band: BandTrace, full_sweeps: bool = True) -> QuadratureSamples:
    """Pair each band sample with its LO phase θ = 2πt/T + θ₀ (mod 2π).

    With ``full_sweeps`` the record is cut to an integer number of complete
    sweeps so the phases are uniformly covered.
    """
    cfg = band.config
    if cfg.sweep_period <= 0:
        raise ValueError("sweep period must be positive")
    n = cfg.n_full_sweep_samples if full_sweeps else cfg.n_samples
    t = np.arange(n) / cfg.sample_rate
    theta = np.mod(2 * np.pi * t / cfg.sweep_period + cfg.phase_offset, 2 * np.pi)
    return QuadratureSamples(band.band_index, band_center(band.band_index, cfg),
                             band.samples[:n], theta)


def vacuum_scale(vacuum) -> float:
    """Factor that brings a vacuum band to Var = 1/2."""
    x = vacuum.x if isinstance(vacuum, QuadratureSamples) else vacuum.samples
    var = float(np.var(x))
    if not var > 1e-300 or not np.isfinite(var):
        raise CalibrationError(f"vacuum band variance {var!r} is unusable for calibration")
    return float(np.sqrt(VACUUM_VARIANCE / var))


def normalize_by_vacuum(signal: QuadratureSamples, vacuum) -> QuadratureSamples:
    """Scale a signal band so the matching vacuum band has variance 1/2."""
    if signal.band_index != vacuum.band_index:
        raise CalibrationError(
            f"band mismatch: signal {signal.band_index}, vacuum {vacuum.band_index}")
    s = vacuum_scale(vacuum)
    return QuadratureSamples(signal.band_index, signal.center_frequency, signal.x * s,
                             signal.theta)


@dataclass(frozen=True, eq=False)
class BandDecomposition:
    bands: list
    config: AcquisitionConfig
    discarded: frozenset = frozenset()
    scales: dict = field(default_factory=dict)

    def active(self) -> list:
        return [b for b in self.bands if b.band_index not in self.discarded]

    def band(self, index: int) -> QuadratureSamples:
        return self.bands[index]


def discard_low_band(decomposition: BandDecomposition, band_index: int = 0) -> BandDecomposition:
    if len(decomposition.bands) < 2:
        raise ValueError("need at least two bands")
    return replace(decomposition, discarded=decomposition.discarded | {band_index})


def decompose_and_calibrate(signal: BroadbandTrace, vacuum: BroadbandTrace,
                            discard_low: bool = True, taper_bins: int = 0,
                            full_sweeps: bool = True) -> BandDecomposition:
    """Split, phase-tag and vacuum-normalize every band of a signal trace."""
    if vacuum is None:
        raise CalibrationError("a vacuum trace is required for band normalization")
    cfg = signal.config
    if (vacuum.config.n_samples, vacuum.config.sample_rate, vacuum.config.sweep_period) != \
            (cfg.n_samples, cfg.sample_rate, cfg.sweep_period):
        raise CalibrationError("signal and vacuum traces have different acquisition settings")
    sig_bands = band_decompose(signal, cfg.n_bands, taper_bins)
    vac_bands = band_decompose(vacuum, cfg.n_bands, taper_bins)
    bands, scales = [], {}
    for sb, vb in zip(sig_bands, vac_bands):
        vq = attach_phase(vb, full_sweeps)
        scales[sb.band_index] = vacuum_scale(vq)
        bands.append(normalize_by_vacuum(attach_phase(sb, full_sweeps), vq))
    dec = BandDecomposition(bands, cfg, frozenset(), scales)
    return discard_low_band(dec) if discard_low else dec
