"""Tomograms, filtered back-projection and Fock-basis Wigner synthesis."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from ..core import DensityMatrix, QuadratureSamples, WignerGrid


@dataclass(frozen=True, eq=False)
class Tomogram:
    """Phase-resolved quadrature histogram.

    ``probability[j, i]`` is the fraction of phase-bin-j samples that fall in
    quadrature bin i; every row sums to one.
    """

    theta: np.ndarray
    x_edges: np.ndarray
    counts: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return 0.5 * (self.x_edges[1:] + self.x_edges[:-1])

    @property
    def dx(self) -> float:
        return float(self.x_edges[1] - self.x_edges[0])

    @property
    def probability(self) -> np.ndarray:
        return self.counts / self.counts.sum(axis=1, keepdims=True)

    @property
    def density(self) -> np.ndarray:
        return self.probability / self.dx

    def column_variance(self) -> np.ndarray:
        p = self.probability
        mean = p @ self.x
        return p @ self.x**2 - mean**2


def marginal_histogram(samples: QuadratureSamples, n_phase_bins: int = 64,
                       n_x_bins: int = 256, x_range: float | None = None) -> Tomogram:
    if n_phase_bins < 8 or n_x_bins < 8:
        raise ValueError("need at least 8 phase and 8 quadrature bins")
    if x_range is None:
        x_range = float(np.max(np.abs(samples.x))) * (1 + 1e-9) or 1.0
    th_edges = np.linspace(0.0, 2 * np.pi, n_phase_bins + 1)
    x_edges = np.linspace(-x_range, x_range, n_x_bins + 1)
    counts, _, _ = np.histogram2d(np.mod(samples.theta, 2 * np.pi), samples.x,
                                  bins=(th_edges, x_edges))
    if np.any(counts.sum(axis=1) == 0):
        raise ValueError("empty phase bin in tomogram")
    return Tomogram(0.5 * (th_edges[1:] + th_edges[:-1]), x_edges, counts)


def ramp_kernel(u, k_c: float):
    """∫_{-k_c}^{k_c} |k| e^{iku} dk."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = np.abs(k_c * u) < 1e-4
    us = u[~small]
    out[~small] = 2 * ((np.cos(k_c * us) - 1) / us**2 + k_c * np.sin(k_c * us) / us)
    z = k_c * u[small]
    out[small] = k_c**2 * (1 - z**2 / 4)
    return out


def default_grid(half_width: float, n_points: int = 129):
    g = np.linspace(-half_width, half_width, n_points)
    return g, g.copy()


def wigner_backprojection(tomogram: Tomogram, k_c: float = 5.0, x=None, p=None,
                          oversample: int = 8) -> WignerGrid:
    """Inverse Radon transform with a ramp filter cut off at |k| <= k_c.

    W(x, p) = 1/(8π²) Σ_j Δθ ∫ dx' pr(x'|θ_j) K(x cosθ_j + p sinθ_j - x'),
    summing over phase bins that cover the full circle.
    """
    if k_c <= 0:
        raise ValueError("cutoff k_c must be positive")
    if x is None or p is None:
        x, p = default_grid(float(tomogram.x_edges[-1]))
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    prob = tomogram.probability
    centers = tomogram.x
    reach = float(np.hypot(np.abs(x).max(), np.abs(p).max()))
    step = tomogram.dx / oversample
    u = np.arange(-reach - step, reach + 2 * step, step)
    filt = ramp_kernel(u[:, None] - centers[None, :], k_c)  # (n_u, n_x)
    projections = prob @ filt.T  # (n_theta, n_u)
    dtheta = 2 * np.pi / len(tomogram.theta)
    X, P = np.meshgrid(x, p)
    W = np.zeros_like(X)
    for th, q in zip(tomogram.theta, projections):
        W += np.interp(X * np.cos(th) + P * np.sin(th), u, q)
    W *= dtheta / (8 * np.pi**2)
    return WignerGrid(x, p, W)


def fock_wigner_element(m: int, n: int, x, p):
    """Wigner function of the operator |m><n| (complex), m >= n."""
    if m < n:
        return np.conj(fock_wigner_element(n, m, x, p))
    r2 = x * x + p * p
    log_pref = 0.5 * (gammaln(n + 1) - gammaln(m + 1))
    z = np.sqrt(2.0) * (x - 1j * p)
    return ((-1) ** n / math.pi) * np.exp(log_pref - r2) * z ** (m - n) * \
        eval_genlaguerre(n, m - n, 2 * r2)


def wigner_from_density(rho: DensityMatrix, x, p) -> WignerGrid:
    """Wigner function of ρ on the grid spanned by ``x`` and ``p``."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    X, P = np.meshgrid(x, p)
    r = rho.rho
    W = np.zeros_like(X)
    for m in range(r.shape[0]):
        W += r[m, m].real * fock_wigner_element(m, m, X, P).real
        for n in range(m):
            if r[m, n] != 0:
                W += 2 * (r[m, n] * fock_wigner_element(m, n, X, P)).real
    return WignerGrid(x, p, W)


def rotate_grid(w: WignerGrid, angle: float) -> np.ndarray:
    """Values of W(R(-angle) r) on the grid of ``w`` (W rotated by +angle)."""
    from scipy.interpolate import RegularGridInterpolator

    X, P = np.meshgrid(w.x, w.p)
    c, s = math.cos(angle), math.sin(angle)
    xs = c * X + s * P
    ps = -s * X + c * P
    f = RegularGridInterpolator((w.p, w.x), w.values, bounds_error=False, fill_value=0.0)
    return f(np.stack([ps.ravel(), xs.ravel()], axis=1)).reshape(X.shape)


def marginal(w: WignerGrid, axis: str = "x") -> np.ndarray:
    """Integrate W over the other quadrature."""
    if axis == "x":
        return w.values.sum(axis=0) * (w.p[1] - w.p[0])
    return w.values.sum(axis=1) * (w.x[1] - w.x[0])
