"""Harmonic-oscillator eigenfunctions and pattern functions.

Eigenfunctions follow the convention |ψ₀(x)|² = π^{-1/2} e^{-x²}. Pattern
functions are f_nm = 2 d/dx [ψ_n φ_m] for m >= n, with φ_m the irregular
solution of the same energy, parity opposite to ψ_m and unit Wronskian
ψ_m φ_m' - ψ_m' φ_m = 1.

φ_m grows like e^{x²/2}, so it is carried in the scaled form
u_m = φ_m e^{-x²/2}, which obeys u'' + 2x u' + (2m + 2) u = 0 and decays like
x^{-m-1}. Integrated outward from x = 0 it is the dominant solution, which
keeps the integration stable. The eigenfunction partner is carried as
ψ̃_n = ψ_n e^{x²/2} (a scaled Hermite polynomial) so the product never
over- or underflows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

_PI_QUARTER = np.pi ** -0.25


def oscillator_wavefunction(n: int, x) -> np.ndarray:
    """Normalized eigenfunction ψ_n on ``x`` (three-term recurrence)."""
    return oscillator_wavefunctions(n, x)[n]


def oscillator_wavefunctions(n_max: int, x) -> np.ndarray:
    """ψ_0 .. ψ_{n_max} on ``x``, shape (n_max + 1, len(x))."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("grid must be finite")
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = _PI_QUARTER * np.exp(-0.5 * x * x)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = (np.sqrt(2.0) * x * out[n] - np.sqrt(n) * out[n - 1]) / np.sqrt(n + 1)
    return out


def scaled_wavefunctions(n_max: int, x) -> np.ndarray:
    """ψ_n(x) e^{x²/2}, i.e. normalized Hermite polynomials times π^{-1/4}."""
    x = np.asarray(x, dtype=float)
    out = np.empty((n_max + 1,) + x.shape)
    out[0] = _PI_QUARTER
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * x * out[0]
    for n in range(1, n_max):
        out[n + 1] = (np.sqrt(2.0) * x * out[n] - np.sqrt(n) * out[n - 1]) / np.sqrt(n + 1)
    return out


def scaled_irregular(m_max: int, x, psi0, dpsi0, rtol: float = 1e-12):
    """u_m = φ_m e^{-x²/2} and u_m' on ``x`` for m = 0 .. m_max.

    ``psi0``/``dpsi0`` hold ψ_m(0) and ψ_m'(0); they fix the parity and the
    Wronskian normalization. All orders are integrated as one system.
    Returns two arrays of shape (m_max + 1, len(x)).
    """
    x = np.asarray(x, dtype=float)
    m = np.arange(m_max + 1)
    even = m % 2 == 0
    u0 = np.where(even, 0.0, -1.0 / np.where(even, 1.0, dpsi0[: m_max + 1]))
    du0 = np.where(even, 1.0 / np.where(even, psi0[: m_max + 1], 1.0), 0.0)
    ax = np.abs(x)
    top = float(ax.max()) if ax.size else 0.0
    k = 2.0 * m + 2.0
    size = m_max + 1

    def rhs(t, y):
        u, du = y[:size], y[size:]
        return np.concatenate([du, -2.0 * t * du - k * u])

    if top > 0:
        sol = solve_ivp(rhs, (0.0, top), np.concatenate([u0, du0]), method="DOP853",
                        rtol=rtol, atol=1e-250, first_step=1e-4, dense_output=True)
        if not sol.success:
            raise RuntimeError(f"irregular solutions failed: {sol.message}")
        y = sol.sol(ax)
        u, du = y[:size], y[size:]
    else:
        u = np.repeat(u0[:, None], ax.size, axis=1)
        du = np.repeat(du0[:, None], ax.size, axis=1)
    # φ_m has parity (-1)^(m+1), its derivative the opposite
    sign_u = np.where(even, -1.0, 1.0)[:, None]
    neg = (x < 0)[None, :]
    u = np.where(neg, sign_u * u, u)
    du = np.where(neg, -sign_u * du, du)
    return u, du


def required_span(n_max: int, margin: float = 2.0) -> float:
    """Half width a grid must reach to cover the classical region of ψ_{n_max}."""
    return float(np.sqrt(2 * n_max + 1) + margin)


@dataclass(frozen=True, eq=False)
class PatternKernel:
    """Pattern functions f_nm sampled on a grid.

    ``values[n, m]`` holds f_nm(x) for all 0 <= n, m <= n_max (symmetric).
    """

    n_max: int
    x: np.ndarray
    values: np.ndarray

    def __call__(self, n: int, m: int) -> np.ndarray:
        return self.values[n, m]

    @property
    def spacing(self) -> float:
        return float(self.x[1] - self.x[0])


def pattern_functions(n_max: int, x) -> np.ndarray:
    """f_nm(x) for 0 <= n, m <= n_max, shape (n_max + 1, n_max + 1, len(x))."""
    x = np.asarray(x, dtype=float)
    at_zero = oscillator_wavefunctions(n_max + 1, np.zeros(1))[:, 0]
    # ψ_m'(0) = (sqrt(m) ψ_{m-1}(0) - sqrt(m+1) ψ_{m+1}(0)) / sqrt(2)
    dpsi0 = np.array([(np.sqrt(m) * at_zero[m - 1] if m else 0.0)
                      - np.sqrt(m + 1) * at_zero[m + 1] for m in range(n_max + 1)]) / np.sqrt(2)
    psi_t = scaled_wavefunctions(n_max, x)
    dpsi_t = np.zeros_like(psi_t)
    for n in range(1, n_max + 1):
        dpsi_t[n] = np.sqrt(2.0 * n) * psi_t[n - 1]
    f = np.empty((n_max + 1, n_max + 1, x.size))
    u, du = scaled_irregular(n_max, x, at_zero, dpsi0)
    for m in range(n_max + 1):
        for n in range(m + 1):
            f[n, m] = 2.0 * (dpsi_t[n] * u[m] + psi_t[n] * du[m])
            f[m, n] = f[n, m]
    return f


def pattern_kernel(n_max: int, x=None, span: float | None = None,
                   spacing: float = 16 / 1023) -> PatternKernel:
    """Sample the pattern functions on a uniform grid.

    Either pass an explicit uniform ``x`` grid or a half ``span`` (default
    ``max(8, required_span(n_max))``) and ``spacing``.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    if x is None:
        span = max(8.0, required_span(n_max)) if span is None else span
        npts = int(np.ceil(2 * span / spacing)) + 1
        x = np.linspace(-span, span, npts)
    x = np.asarray(x, dtype=float)
    need = np.sqrt(2 * n_max + 1) + 1.0
    if x.min() > -need or x.max() < need:
        raise ValueError(
            f"grid [{x.min():.3g}, {x.max():.3g}] too narrow for n_max={n_max}; "
            f"needs at least |x| >= {need:.3g}")
    values = pattern_functions(n_max, x)
    values.setflags(write=False)
    x = x.copy()
    x.setflags(write=False)
    return PatternKernel(n_max, x, values)
