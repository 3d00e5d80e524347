"""Synthetic broadband homodyne traces of a below-threshold OPA.

Each spectral band carries two independent, spectrally confined white Gaussian
processes X_b, Y_b. The LO phase θ(t) = 2πt/T + θ₀ sweeps slowly, and the band
output is ``sqrt(Ψ₊/2) cos θ X_b + sqrt(Ψ₋/2) sin θ Y_b`` so the instantaneous
quadrature variance follows (Ψ₊ cos²θ + Ψ₋ sin²θ) / 2, antisqueezed along θ = 0.
"""

from __future__ import annotations

import numpy as np

from .core import (AcquisitionConfig, BroadbandTrace, OpaParams, TraceKind,
                   band_centers)
from .spectral import band_bin_edges

_SIGNAL_STREAM = 0
_VACUUM_STREAM = 1


def band_variances(params: OpaParams, omega):
    """Squeezed and antisqueezed noise powers (Ψ₋, Ψ₊) at sideband frequency ``omega``."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("sideband frequency must be non-negative")
    d = params.pump_parameter
    gain = params.vacuum_density * params.efficiency * 4 * d
    x2 = (omega / params.cavity_hwhm) ** 2
    psi_minus = params.vacuum_density - gain / (x2 + (1 + d) ** 2)
    psi_plus = params.vacuum_density + gain / (x2 + (1 - d) ** 2)
    if psi_minus.ndim == 0:
        return float(psi_minus), float(psi_plus)
    return psi_minus, psi_plus


def lo_phase(config: AcquisitionConfig, n: int | None = None) -> np.ndarray:
    """LO phase of every sample, wrapped to [0, 2π)."""
    n = config.n_samples if n is None else n
    t = np.arange(n) / config.sample_rate
    return np.mod(2 * np.pi * t / config.sweep_period + config.phase_offset, 2 * np.pi)


def band_noise(rng: np.random.Generator, n_samples: int, lo: int, hi: int) -> np.ndarray:
    """Unit-variance real Gaussian noise confined to rfft bins [lo, hi)."""
    n_rfft = n_samples // 2 + 1
    spec = np.zeros(n_rfft, dtype=complex)
    k = hi - lo
    spec[lo:hi] = (rng.standard_normal(k) + 1j * rng.standard_normal(k)) * np.sqrt(n_samples / 2)
    weight = 2.0 * k
    # self-conjugate bins carry a single real degree of freedom
    for edge in {0, n_rfft - 1} if n_samples % 2 == 0 else {0}:
        if lo <= edge < hi:
            spec[edge] = rng.standard_normal() * np.sqrt(n_samples)
            weight -= 1.0
    x = np.fft.irfft(spec, n=n_samples)
    return x / np.sqrt(weight / n_samples)


def _band_rng(seed: int, stream: int, band: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, stream, band])


def _synthesize(psi_minus, psi_plus, acq: AcquisitionConfig, seed: int, stream: int):
    n = acq.n_samples
    edges = band_bin_edges(n, acq.n_bands)
    theta = lo_phase(acq)
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros(n)
    for b in range(acq.n_bands):
        rng = _band_rng(seed, stream, b)
        lo, hi = edges[b], edges[b + 1]
        xb = band_noise(rng, n, lo, hi)
        yb = band_noise(rng, n, lo, hi)
        out += np.sqrt(psi_plus[b] / 2) * c * xb + np.sqrt(psi_minus[b] / 2) * s * yb
    return out


def simulate_trace(params: OpaParams, acq: AcquisitionConfig, seed: int,
                   full_scale: float | None = None) -> BroadbandTrace:
    """Homodyne difference current of the OPA output, in vacuum-normalized units."""
    psi_minus, psi_plus = band_variances(params, band_centers(acq))
    samples = _synthesize(psi_minus, psi_plus, acq, seed, _SIGNAL_STREAM)
    trace = BroadbandTrace(samples, acq, TraceKind.SIGNAL)
    if acq.adc_bits is not None:
        if full_scale is None:
            full_scale = 5 * np.sqrt(np.sum(psi_plus) / 2)
        trace = apply_adc(trace, acq.adc_bits, full_scale)
    return trace


def simulate_vacuum_trace(acq: AcquisitionConfig, seed: int,
                          full_scale: float | None = None) -> BroadbandTrace:
    ones = np.ones(acq.n_bands)
    samples = _synthesize(ones, ones, acq, seed, _VACUUM_STREAM)
    trace = BroadbandTrace(samples, acq, TraceKind.VACUUM)
    if acq.adc_bits is not None:
        if full_scale is None:
            full_scale = 5 * np.sqrt(acq.n_bands / 2)
        trace = apply_adc(trace, acq.adc_bits, full_scale)
    return trace


def apply_adc(trace: BroadbandTrace, bits: int, full_scale: float | None = None) -> BroadbandTrace:
    """Uniform mid-rise quantizer clipped at ±full_scale."""
    if not 4 <= bits <= 24:
        raise ValueError("bits must be in [4, 24]")
    if full_scale is None:
        full_scale = 5 * float(np.std(trace.samples))
    if full_scale <= 0:
        raise ValueError("full_scale must be positive")
    step = 2 * full_scale / 2**bits
    top = full_scale - step / 2
    q = step * (np.floor(trace.samples / step) + 0.5)
    return trace.replace_samples(np.clip(q, -top, top))
