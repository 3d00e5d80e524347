"""Density-matrix estimation by pattern-function sampling."""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..core import DensityMatrix, QuadratureSamples
from .kernel import PatternKernel, pattern_kernel, required_span

DEFAULT_NMAX = 30
ESTIMATOR_SPACING = 0.005


@functools.lru_cache(maxsize=8)
def _cached_kernel(n_max: int, span: float, spacing: float) -> PatternKernel:
    return pattern_kernel(n_max, span=span, spacing=spacing)


def kernel_for(n_max: int, x_extent: float, spacing: float = ESTIMATOR_SPACING) -> PatternKernel:
    """Kernel whose grid covers ``x_extent``; spans are rounded up so bands can share it."""
    span = max(8.0, required_span(n_max), float(np.ceil(x_extent + 2 * spacing)))
    return _cached_kernel(n_max, span, spacing)


def _linear_bins(x, grid_start, spacing, n_grid):
    pos = (x - grid_start) / spacing
    j = np.floor(pos).astype(np.int64)
    j = np.clip(j, 0, n_grid - 2)
    frac = pos - j
    return j, frac


def phase_coverage(theta, n_bins: int = 64) -> float:
    """Largest relative deviation of the phase histogram from uniform."""
    counts = np.bincount((np.mod(theta, 2 * np.pi) / (2 * np.pi) * n_bins).astype(int) % n_bins,
                         minlength=n_bins)
    expected = len(theta) / n_bins
    return float(np.max(np.abs(counts - expected)) / expected)


def estimate_density_matrix(samples: QuadratureSamples, n_max: int = DEFAULT_NMAX,
                            kernel: PatternKernel | None = None,
                            coverage_tolerance: float = 0.2) -> DensityMatrix:
    """ρ_nm as the sample mean of f_nm(x) e^{i(n-m)θ}.

    Pattern functions are linearly interpolated from ``kernel`` (built to span
    the data when omitted). The accumulation order is fixed, so equal input
    gives bit-identical output.
    """
    x = samples.x
    theta = samples.theta
    n = x.size
    if n == 0:
        raise ValueError("no quadrature samples to reconstruct from")
    if kernel is None:
        kernel = kernel_for(n_max, float(np.max(np.abs(x))))
    elif kernel.n_max < n_max:
        raise ValueError(f"kernel built for n_max={kernel.n_max} < {n_max}")
    grid = kernel.x
    h = kernel.spacing
    if x.min() < grid[0] or x.max() > grid[-1]:
        raise ValueError("samples fall outside the kernel grid")
    j, frac = _linear_bins(x, grid[0], h, grid.size)
    ng = grid.size
    rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    for k in range(n_max + 1):
        if k == 0:
            wr, wi = np.ones(n), None
        else:
            wr, wi = np.cos(k * theta), np.sin(k * theta)
        hist = np.bincount(j, (1 - frac) * wr, ng) + np.bincount(j + 1, frac * wr, ng)
        if wi is not None:
            hist = hist + 1j * (np.bincount(j, (1 - frac) * wi, ng)
                                + np.bincount(j + 1, frac * wi, ng))
        for m in range(n_max + 1 - k):
            rho[m + k, m] = kernel.values[m + k, m] @ hist / n
    lower = np.tril(rho, -1)
    rho = np.diag(rho.diagonal().real).astype(complex) + lower + lower.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    dev = phase_coverage(theta)
    meta = {"n_samples": int(n), "n_max": int(n_max), "band_index": int(samples.band_index),
            "phase_coverage_deviation": dev}
    # allow for counting noise in 64 bins before calling coverage poor
    if dev > coverage_tolerance + 4 / math.sqrt(n / 64):
        meta["warning"] = "non-uniform phase coverage"
        warnings.warn(f"band {samples.band_index}: phase coverage deviates by {dev:.2f}")
    return DensityMatrix(rho, meta)


def gaussian_state_density(v_plus: float, v_minus: float, n_max: int, angle: float = 0.0,
                           n_theta: int = 256, spacing: float = 0.01) -> DensityMatrix:
    """Reference ρ of a zero-mean Gaussian state by direct quadrature.

    ``v_plus``/``v_minus`` are the largest/smallest quadrature variances
    (vacuum = 1/2); the largest lies along LO phase ``angle``. Each element is
    the double integral of f_nm(x) e^{i(n-m)θ} against the Gaussian marginal
    p(x|θ), taken with the trapezoidal rule in x and θ.
    """
    if not (v_plus > 0 and v_minus > 0):
        raise ValueError("variances must be positive")
    span = max(required_span(n_max), 10.0 * math.sqrt(max(v_plus, v_minus)))
    kern = pattern_kernel(n_max, span=math.ceil(span), spacing=spacing)
    x = kern.x
    theta = np.arange(n_theta) * 2 * np.pi / n_theta
    var = v_plus * np.cos(theta - angle) ** 2 + v_minus * np.sin(theta - angle) ** 2
    marg = np.exp(-0.5 * x[None, :] ** 2 / var[:, None]) / np.sqrt(2 * np.pi * var[:, None])
    w = np.full(x.size, spacing)
    w[[0, -1]] *= 0.5
    marg *= w
    rho = np.zeros((n_max + 1, n_max + 1), dtype=complex)
    for k in range(n_max + 1):
        phase = np.exp(1j * k * theta) / n_theta
        weighted = phase @ marg
        for m in range(n_max + 1 - k):
            rho[m + k, m] = kern.values[m + k, m] @ weighted
            rho[m, m + k] = np.conj(rho[m + k, m])
    return DensityMatrix(rho, {"oracle": "gaussian", "v_plus": v_plus, "v_minus": v_minus,
                               "angle": angle})


@dataclass(frozen=True)
class PhotonDistribution:
    probabilities: np.ndarray
    clipped_mass: float
    raw_trace: float
    flagged: bool

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probabilities, dtype=dtype)

    def __len__(self):
        return len(self.probabilities)

    def __getitem__(self, i):
        return self.probabilities[i]

    @property
    def mean(self) -> float:
        return float(np.arange(len(self.probabilities)) @ self.probabilities)


def photon_distribution(rho: DensityMatrix, trace_tolerance: float = 0.05) -> PhotonDistribution:
    """Diagonal of ρ, negative entries clipped to 0, renormalized."""
    diag = rho.rho.diagonal().real.copy()
    raw = float(diag.sum())
    clipped = float(-diag[diag < 0].sum())
    diag[diag < 0] = 0.0
    total = diag.sum()
    if total <= 0:
        raise ValueError("density matrix has no positive population")
    return PhotonDistribution(diag / total, clipped, raw, abs(raw - 1) > trace_tolerance)


def has_parity_oscillation(p, rel_tol: float = 1e-3) -> bool:
    """True when the distribution has a strict interior local minimum.

    Smooth unimodal or monotone distributions have none; photon-number
    oscillations show up as dips at every other n.
    """
    p = np.asarray(p, dtype=float)
    if p.size < 3:
        return False
    tol = rel_tol * p.max()
    inner = p[1:-1]
    dips = (inner < p[:-2] - tol) & (inner < p[2:] - tol)
    return bool(np.any(dips))


def oscillation_signature(p) -> bool:
    """p(1) < (p(0) + p(2)) / 2."""
    p = np.asarray(p, dtype=float)
    return bool(p[1] < 0.5 * (p[0] + p[2]))
