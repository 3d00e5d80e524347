"""Spectrum-level and total-field analyses."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.optimize import minimize

from .core import (VACUUM_VARIANCE, BroadbandTrace, OpaParams, QuadratureSamples,
                   SqueezingSpectrum, to_decibel)
from .opa import band_variances
from .spectral import BandDecomposition, retained_fraction

MIN_BIN_COUNT = 50
WAVELENGTH = 1064e-9


# --- phase-resolved variances ---------------------------------------------

@dataclass(frozen=True, eq=False)
class PhaseVariance:
    """Phase-binned variance curve and the fitted variance law.

    Any zero-mean Gaussian state has V(θ) = a + b cos 2θ + c sin 2θ; the
    extremes a ∓ sqrt(b² + c²) are read off the fitted law rather than from
    single noisy bins.
    """

    theta: np.ndarray
    variance: np.ndarray
    counts: np.ndarray
    coefficients: np.ndarray

    @property
    def amplitude(self) -> float:
        return float(np.hypot(self.coefficients[1], self.coefficients[2]))

    @property
    def v_min(self) -> float:
        return float(self.coefficients[0]) - self.amplitude

    @property
    def v_max(self) -> float:
        return float(self.coefficients[0]) + self.amplitude

    @property
    def antisqueezed_angle(self) -> float:
        return 0.5 * math.atan2(self.coefficients[2], self.coefficients[1]) % math.pi

    def model(self, theta) -> np.ndarray:
        a, b, c = self.coefficients
        return a + b * np.cos(2 * theta) + c * np.sin(2 * theta)


def _phase_bin_index(theta, n_bins):
    return (np.mod(theta, 2 * np.pi) / (2 * np.pi) * n_bins).astype(np.int64) % n_bins


def phase_binned_variance(x, theta, n_bins: int = 64, iterations: int = 20) -> PhaseVariance:
    """Variance of ``x`` in uniform phase bins plus a weighted fit of the variance law.

    The fit accounts for averaging cos 2θ over each bin and weights every bin
    by count / V², the inverse variance of a Gaussian variance estimate.
    """
    x = np.asarray(x, dtype=float)
    idx = _phase_bin_index(theta, n_bins)
    counts = np.bincount(idx, minlength=n_bins).astype(float)
    safe = np.maximum(counts, 1)
    mean = np.bincount(idx, x, n_bins) / safe
    var = np.bincount(idx, x * x, n_bins) / safe - mean**2
    centers = (np.arange(n_bins) + 0.5) * 2 * np.pi / n_bins
    half = math.pi / n_bins
    att = math.sin(2 * half) / (2 * half)
    design = np.column_stack([np.ones(n_bins), att * np.cos(2 * centers),
                              att * np.sin(2 * centers)])
    use = counts > 1
    floor = 1e-12 * max(float(var.max()), 1e-300)
    weight = counts / np.maximum(var, floor) ** 2
    coef = np.zeros(3)
    for _ in range(iterations):
        sw = np.sqrt(weight[use])
        coef = np.linalg.lstsq(design[use] * sw[:, None], var[use] * sw, rcond=None)[0]
        fitted = np.maximum(design @ coef, floor)
        weight = counts / fitted**2
    return PhaseVariance(centers, var, counts, coef)


def squeezing_spectrum(decomposition: BandDecomposition, n_phase_bins: int = 64,
                       min_count: int = MIN_BIN_COUNT) -> SqueezingSpectrum:
    """Per-band minimum and maximum quadrature noise power (vacuum = 1)."""
    bands = decomposition.active()
    if len(bands) < 2:
        raise ValueError("need at least two active bands")
    idx, omega, vmin, vmax, flags = [], [], [], [], []
    for band in bands:
        pv = phase_binned_variance(band.x, band.theta, n_phase_bins)
        idx.append(band.band_index)
        omega.append(band.center_frequency)
        vmin.append(pv.v_min / VACUUM_VARIANCE)
        vmax.append(pv.v_max / VACUUM_VARIANCE)
        flags.append(bool(pv.counts.min() < min_count))
    return SqueezingSpectrum(np.array(idx), np.array(omega), np.array(vmin), np.array(vmax),
                             np.array(flags))


def band_phase_curves(decomposition: BandDecomposition, n_phase_bins: int = 64) -> dict:
    return {b.band_index: phase_binned_variance(b.x, b.theta, n_phase_bins)
            for b in decomposition.active()}


# --- spectrum fit ----------------------------------------------------------

class FitError(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class SpectrumFit:
    pump_parameter: float
    efficiency: float
    cavity_hwhm: float
    residual_norm: float
    covariance: np.ndarray = field(repr=False)
    gamma_fitted: bool = False

    @property
    def params(self) -> OpaParams:
        return OpaParams.from_efficiency(self.pump_parameter, self.efficiency,
                                         cavity_hwhm=self.cavity_hwhm)

    @property
    def stderr(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.covariance), 0, None))


def _model(omega, d, eff, gamma):
    x2 = (omega / gamma) ** 2
    return 1 - eff * 4 * d / (x2 + (1 + d) ** 2), 1 + eff * 4 * d / (x2 + (1 - d) ** 2)


def fit_spectrum(spectrum: SqueezingSpectrum, cavity_hwhm: float = 2 * math.pi * 17.5e6,
                 fit_gamma: bool = False, n_starts: int = 8,
                 max_iterations: int = 20000) -> SpectrumFit:
    """Joint least-squares fit of both noise branches.

    Residuals are log ratios so both branches weigh equally. Nelder-Mead runs
    from ``n_starts`` points of a coarse (d, ξη) grid; the best is kept.
    """
    spec = spectrum.active()
    if spec.omega.size < 3:
        raise ValueError("need at least three bands to fit")
    omega = spec.omega
    log_lo, log_hi = np.log(spec.v_min), np.log(spec.v_max)

    def residuals(theta):
        d, eff = theta[0], theta[1]
        gamma = theta[2] * cavity_hwhm if fit_gamma else cavity_hwhm
        lo, hi = _model(omega, d, eff, gamma)
        if np.any(lo <= 0):
            return None
        return np.concatenate([np.log(lo) - log_lo, np.log(hi) - log_hi])

    def cost(theta):
        r = residuals(theta)
        return 1e6 if r is None else float(r @ r)

    bounds = [(0.0, 0.999), (1e-6, 1.0)] + ([(0.05, 20.0)] if fit_gamma else [])
    grid_d = np.linspace(0.2, 0.8, 4)
    grid_e = np.linspace(0.35, 0.75, max(1, n_starts // 4))
    starts = list(itertools.product(grid_d, grid_e))[:n_starts]
    options = {"xatol": 1e-10, "fatol": 1e-15, "maxiter": max_iterations,
               "maxfev": 2 * max_iterations}
    best = None
    for d0, e0 in starts:
        x0 = [d0, e0] + ([1.0] if fit_gamma else [])
        res = minimize(cost, x0, method="Nelder-Mead", bounds=bounds, options=options)
        if best is None or res.fun < best.fun:
            best = res
    if best is None or not np.isfinite(best.fun) or best.fun >= 1e6:
        raise FitError("spectrum fit did not converge", best)
    # a fresh simplex around the winner settles runs that stalled on the iteration cap
    polish = minimize(cost, best.x, method="Nelder-Mead", bounds=bounds, options=options)
    if polish.fun <= best.fun:
        best = polish
    theta = best.x
    cov = _covariance(residuals, theta, bounds)
    gamma = theta[2] * cavity_hwhm if fit_gamma else cavity_hwhm
    if fit_gamma:
        cov[2, :] *= cavity_hwhm
        cov[:, 2] *= cavity_hwhm
    if not best.success:
        raise FitError(f"spectrum fit did not converge: {best.message}",
                       SpectrumFit(float(theta[0]), float(theta[1]), gamma,
                                   math.sqrt(best.fun), cov, fit_gamma))
    return SpectrumFit(float(theta[0]), float(theta[1]), float(gamma), math.sqrt(best.fun), cov,
                       fit_gamma)


def _covariance(residuals, theta, bounds, rel_step=1e-6):
    theta = np.asarray(theta, dtype=float)
    r0 = residuals(theta)
    jac = np.empty((r0.size, theta.size))
    for i in range(theta.size):
        h = rel_step * max(abs(theta[i]), 1e-3)
        lo_b, hi_b = bounds[i]
        up = theta.copy()
        dn = theta.copy()
        up[i] = min(theta[i] + h, hi_b)
        dn[i] = max(theta[i] - h, lo_b)
        r_up, r_dn = residuals(up), residuals(dn)
        if r_up is None or r_dn is None or up[i] == dn[i]:
            jac[:, i] = 0.0
            continue
        jac[:, i] = (r_up - r_dn) / (up[i] - dn[i])
    dof = max(r0.size - theta.size, 1)
    s2 = float(r0 @ r0) / dof
    return s2 * np.linalg.pinv(jac.T @ jac)


def spectrum_from_params(params: OpaParams, omega) -> SqueezingSpectrum:
    """Noise-free spectrum straight from the model, for comparisons and tests."""
    omega = np.asarray(omega, dtype=float)
    lo, hi = band_variances(params, omega)
    return SqueezingSpectrum(np.arange(omega.size), omega, lo, hi)


# --- totals ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TotalVariance:
    curve: PhaseVariance
    vacuum_level: float

    @property
    def theta(self):
        return self.curve.theta

    @property
    def variance(self) -> np.ndarray:
        """Phase-binned total variance, vacuum = 1."""
        return self.curve.variance / self.vacuum_level

    @property
    def v_min(self) -> float:
        return self.curve.v_min / self.vacuum_level

    @property
    def v_max(self) -> float:
        return self.curve.v_max / self.vacuum_level

    @property
    def min_db(self) -> float:
        return to_decibel(self.v_min)

    @property
    def max_db(self) -> float:
        return to_decibel(self.v_max)


def total_variance_vs_phase(trace: BroadbandTrace, n_phase_bins: int = 64,
                            vacuum_level: float | None = None, removed_bands=(0,),
                            min_count: int = MIN_BIN_COUNT) -> TotalVariance:
    """Phase-binned variance of a flattened broadband trace, normalized to vacuum.

    A flattened vacuum has unit spectral density, so after ``removed_bands``
    are zeroed its variance is the retained spectral fraction; that is the
    default ``vacuum_level``.
    """
    cfg = trace.config
    if vacuum_level is None:
        vacuum_level = retained_fraction(cfg.n_samples, cfg.n_bands, removed_bands)
    n = cfg.n_full_sweep_samples
    t = np.arange(n) / cfg.sample_rate
    theta = np.mod(2 * np.pi * t / cfg.sweep_period + cfg.phase_offset, 2 * np.pi)
    if np.bincount(_phase_bin_index(theta, n_phase_bins), minlength=n_phase_bins).min() < min_count:
        raise ValueError("phase bins with too few samples for a total-variance estimate")
    curve = phase_binned_variance(trace.samples[:n], theta, n_phase_bins)
    return TotalVariance(curve, float(vacuum_level))


@dataclass(frozen=True)
class PhotonTotals:
    probabilities: np.ndarray
    tail_mass: float

    @property
    def mean(self) -> float:
        return float(np.arange(self.probabilities.size) @ self.probabilities)


def total_photon_statistics(distributions, length: int | None = None,
                            tolerance: float = 1e-6) -> PhotonTotals:
    """Photon-number distribution of independent modes: the convolution of theirs."""
    dists = [np.asarray(d, dtype=float) for d in distributions]
    if not dists:
        raise ValueError("no distributions given")
    for i, d in enumerate(dists):
        if abs(d.sum() - 1) > tolerance or np.any(d < 0):
            raise ValueError(f"distribution {i} is not normalized (sum {d.sum():.8g})")
    if length is None:
        length = sum(d.size - 1 for d in dists) + 1
    total = np.array([1.0])
    for d in dists:
        total = np.convolve(total, d)[:length]
    out = np.zeros(length)
    out[:total.size] = total
    return PhotonTotals(out, float(max(0.0, 1.0 - out.sum())))


@dataclass(frozen=True)
class PhotonFlux:
    mean_photons: float
    flux: float
    power: float
    bandwidth: float
    per_band: np.ndarray = field(repr=False, default=None)


def mean_photon_and_flux(spectrum: SqueezingSpectrum, bandwidth: float | None = None,
                         wavelength: float = WAVELENGTH) -> PhotonFlux:
    """Average photon number per mode (= per Hz per second), flux and optical power.

    Per band ⟨n⟩ = (Ψ₊ + Ψ₋ − 2) / 4. ``bandwidth`` (Hz) defaults to the
    contiguous span covered by the active bands.
    """
    spec = spectrum.active()
    per_band = (spec.v_max + spec.v_min - 2) / 4
    mean_n = float(per_band.mean())
    if bandwidth is None:
        f = spec.frequency_hz
        width = float(np.median(np.diff(np.sort(f)))) if f.size > 1 else 0.0
        bandwidth = width * f.size
    flux = mean_n * bandwidth
    energy = constants.h * constants.c / wavelength
    return PhotonFlux(mean_n, flux, flux * energy, float(bandwidth), per_band)


# --- first-order correlation -------------------------------------------------

@dataclass(frozen=True, eq=False)
class CorrelationCurve:
    tau: np.ndarray
    values: np.ndarray
    valid: np.ndarray
    normalization: float
    normalized_to: str

    def at(self, tau) -> np.ndarray:
        """Linear interpolation through the valid lags and g₁(0) = 1."""
        t = np.concatenate([[0.0], self.tau[self.valid]])
        v = np.concatenate([[1.0], self.values[self.valid]])
        return np.interp(tau, t, v)


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Unbiased autocovariance for lags 0 .. max_lag."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if max_lag >= n:
        raise ValueError(f"max_lag {max_lag} exceeds record length {n}")
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(x, size)
    acf = np.fft.irfft(spec * spec.conj(), size)[: max_lag + 1]
    return acf / (n - np.arange(max_lag + 1))


def g1_estimate(trace: BroadbandTrace, vacuum: BroadbandTrace, max_lag: int = 16,
                excess_threshold: float = 0.01) -> CorrelationCurve:
    """Phase-averaged first-order correlation of a flattened trace.

    The vacuum autocorrelation is subtracted and the result divided by its
    linear extrapolation to τ = 0 from the first two positive lags; τ = 0
    itself is excluded. When the extrapolated excess is below
    ``excess_threshold`` times the vacuum level (no excess noise at all), the
    curve is reported relative to the vacuum level instead.
    """
    cfg = trace.config
    if max_lag < 2:
        raise ValueError("max_lag must be at least 2")
    n = cfg.n_full_sweep_samples
    if max_lag >= n:
        raise ValueError(f"max_lag {max_lag} beyond trace length {n}")
    c_sig = autocorrelation(trace.samples[:n], max_lag)
    c_vac = autocorrelation(vacuum.samples[:n], max_lag)
    excess = c_sig - c_vac
    c0 = 2 * excess[1] - excess[2]
    if c0 > excess_threshold * c_vac[0]:
        norm, label = c0, "extrapolated"
    else:
        norm, label = c_vac[0], "vacuum"
    tau = np.arange(max_lag + 1) / cfg.sample_rate
    valid = np.arange(max_lag + 1) > 0
    return CorrelationCurve(tau, excess / norm, valid, float(norm), label)


def g1_theory(d: float, gamma: float, tau):
    """First-order correlation of the below-threshold OPA output.

    Written as e^{-Γτ} [cosh(dΓτ) + Γτ sinh(dΓτ)/(dΓτ)], which is free of the
    1/d cancellation and reduces to (1 + Γτ) e^{-Γτ} at d = 0.
    """
    if not 0 <= d < 1:
        raise ValueError("pump parameter must satisfy 0 <= d < 1")
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("delay must be non-negative")
    gt = gamma * tau
    if d == 0:
        out = (1 + gt) * np.exp(-gt)
    else:
        x = d * gt
        fast = np.exp(-(1 - d) * gt)
        slow = np.exp(-(1 + d) * gt)
        with np.errstate(invalid="ignore", divide="ignore"):
            exact = 0.5 * (fast + slow) + gt * (fast - slow) / (2 * x)
        # sinh(x)/x by series where the exponential difference cancels
        xs = np.minimum(x, 1e-3)
        series = np.exp(-gt) * (np.cosh(xs) + gt * (1 + xs * xs / 6 + xs**4 / 120))
        out = np.where(x < 1e-3, series, exact)
    return float(out) if out.ndim == 0 else out


def squeezing_from_samples(samples: QuadratureSamples, n_phase_bins: int = 64):
    """(V_min, V_max) of a single band in power units."""
    pv = phase_binned_variance(samples.x, samples.theta, n_phase_bins)
    return pv.v_min / VACUUM_VARIANCE, pv.v_max / VACUUM_VARIANCE
