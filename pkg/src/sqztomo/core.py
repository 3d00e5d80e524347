"""Shared domain types and unit conventions.

Conventions used throughout the package:

* quadratures are scaled so the vacuum has ``Var(x) = 1/2``;
* spectral noise powers are vacuum normalized (vacuum = 1);
* frequencies called ``omega`` are angular (rad/s), ``*_hz`` are in Hz.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

VACUUM_VARIANCE = 0.5


class AboveThresholdError(ValueError):
    """Raised for a pump parameter at or above the oscillation threshold."""


class CalibrationError(ValueError):
    """Raised when a vacuum reference cannot calibrate a signal."""


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class OpaParams:
    """Below-threshold OPA model parameters.

    ``cavity_hwhm`` is the angular half width Γ of the cavity resonance.
    Only the product ``escape_efficiency * detection_efficiency`` enters the
    noise spectra.
    """

    pump_parameter: float
    cavity_hwhm: float = 2 * math.pi * 17.5e6
    escape_efficiency: float = 0.88
    detection_efficiency: float = 0.7 / 0.88
    vacuum_density: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.pump_parameter:
            raise ValueError(f"pump parameter must be non-negative, got {self.pump_parameter}")
        if self.pump_parameter >= 1.0:
            raise AboveThresholdError(
                f"pump parameter d={self.pump_parameter} is at or above threshold (d < 1 required)"
            )
        if not self.cavity_hwhm > 0:
            raise ValueError("cavity_hwhm must be positive")
        for name in ("escape_efficiency", "detection_efficiency"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.vacuum_density != 1.0:
            raise ValueError("vacuum_density is fixed to 1 (vacuum-normalized units)")

    @property
    def efficiency(self) -> float:
        """Overall efficiency ξη."""
        return self.escape_efficiency * self.detection_efficiency

    @classmethod
    def from_efficiency(cls, pump_parameter, efficiency, cavity_hwhm=2 * math.pi * 17.5e6,
                        escape_efficiency=0.88):
        """Build parameters from the overall efficiency product ξη."""
        if escape_efficiency < efficiency:
            escape_efficiency = 1.0
        return cls(pump_parameter=pump_parameter, cavity_hwhm=cavity_hwhm,
                   escape_efficiency=escape_efficiency,
                   detection_efficiency=efficiency / escape_efficiency if escape_efficiency else 0.0)

    @classmethod
    def nominal(cls) -> "OpaParams":
        """Half the threshold pump power, ξη = 0.7, Γ/2π = 17.5 MHz."""
        return cls.from_efficiency(math.sqrt(0.5), 0.7)


@dataclass(frozen=True)
class AcquisitionConfig:
    sample_rate: float = 60e6
    n_samples: int = 2**19
    sweep_period: float = 8e-3
    phase_offset: float = 0.0
    adc_bits: int | None = None
    n_bands: int = 16

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if self.sweep_period <= 0:
            raise ValueError("sweep_period must be positive")
        if self.n_bands < 2:
            raise ValueError("n_bands must be at least 2")
        if self.n_samples < 2 * self.n_bands:
            raise ValueError("n_samples must be at least 2 * n_bands")
        if self.n_samples / self.sample_rate < self.sweep_period * (1 - 1e-12):
            raise ValueError(
                f"record of {self.n_samples / self.sample_rate:.4g} s does not cover one "
                f"{self.sweep_period:.4g} s phase sweep"
            )
        if self.adc_bits is not None and not 4 <= self.adc_bits <= 24:
            raise ValueError("adc_bits must be in [4, 24] or None")

    @property
    def band_width(self) -> float:
        """Width of one spectral band in Hz."""
        return self.sample_rate / 2 / self.n_bands

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    @property
    def samples_per_sweep(self) -> int:
        return int(round(self.sweep_period * self.sample_rate))

    @property
    def n_full_sweep_samples(self) -> int:
        """Number of leading samples that span an integer number of sweeps."""
        per = self.samples_per_sweep
        return max(per, (self.n_samples // per) * per) if per <= self.n_samples else self.n_samples


class TraceKind(enum.IntEnum):
    SIGNAL = 0
    VACUUM = 1


@dataclass(frozen=True, eq=False)
class BroadbandTrace:
    samples: np.ndarray
    config: AcquisitionConfig
    kind: TraceKind = TraceKind.SIGNAL

    def __post_init__(self):
        arr = _frozen_array(self.samples)
        if arr.ndim != 1 or arr.size != self.config.n_samples:
            raise ValueError(
                f"trace has {arr.size} samples, config expects {self.config.n_samples}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("trace contains non-finite samples")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "kind", TraceKind(self.kind))

    def replace_samples(self, samples) -> "BroadbandTrace":
        return BroadbandTrace(samples, self.config, self.kind)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.config.n_samples) / self.config.sample_rate


@dataclass(frozen=True, eq=False)
class QuadratureSamples:
    """Vacuum-normalized quadrature values of one band, tagged with LO phase."""

    band_index: int
    center_frequency: float
    x: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        x = _frozen_array(self.x)
        theta = _frozen_array(self.theta)
        if x.shape != theta.shape or x.ndim != 1:
            raise ValueError("x and theta must be 1-D arrays of equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "theta", theta)

    def __len__(self):
        return self.x.size

    def shifted(self, delta: float) -> "QuadratureSamples":
        """Same samples with every phase advanced by ``delta``."""
        return QuadratureSamples(self.band_index, self.center_frequency, self.x,
                                 np.mod(self.theta + delta, 2 * np.pi))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Fock-basis density matrix truncated at ``n_max``."""

    rho: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        rho = _frozen_array(self.rho, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        object.__setattr__(self, "rho", rho)

    @property
    def n_max(self) -> int:
        return self.rho.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def is_hermitian(self, atol=1e-12) -> bool:
        return bool(np.allclose(self.rho, self.rho.conj().T, atol=atol))

    def fidelity_to_fock(self, n: int = 0) -> float:
        return float(self.rho[n, n].real)

    @property
    def mean_photon_number(self) -> float:
        return float(np.arange(self.n_max + 1) @ self.rho.diagonal().real)


@dataclass(frozen=True, eq=False)
class WignerGrid:
    x: np.ndarray
    p: np.ndarray
    values: np.ndarray  # indexed [i_p, i_x]

    def __post_init__(self):
        x, p = _frozen_array(self.x), _frozen_array(self.p)
        values = _frozen_array(self.values)
        if values.shape != (p.size, x.size):
            raise ValueError(f"values shape {values.shape} does not match grid ({p.size}, {x.size})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "values", values)

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.p[1] - self.p[0]))

    def integral(self) -> float:
        return float(self.values.sum() * self.cell_area)

    def at(self, x0: float, p0: float) -> float:
        """Bilinear interpolation of W at one phase-space point."""
        from scipy.interpolate import RegularGridInterpolator

        f = RegularGridInterpolator((self.p, self.x), self.values)
        return float(f([[p0, x0]])[0])


@dataclass(frozen=True, eq=False)
class SqueezingSpectrum:
    """Per-band minimum/maximum quadrature noise power (vacuum = 1)."""

    band_index: np.ndarray
    omega: np.ndarray
    v_min: np.ndarray
    v_max: np.ndarray
    flagged: np.ndarray = None

    def __post_init__(self):
        n = len(self.omega)
        object.__setattr__(self, "band_index", _frozen_array(self.band_index, dtype=int))
        for name in ("omega", "v_min", "v_max"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        flags = np.zeros(n, bool) if self.flagged is None else self.flagged
        object.__setattr__(self, "flagged", _frozen_array(flags, dtype=bool))
        if not (self.band_index.size == self.v_min.size == self.v_max.size == n):
            raise ValueError("spectrum arrays must have equal length")
        if np.any(self.v_min <= 0) or np.any(self.v_min > self.v_max):
            raise ValueError("require 0 < v_min <= v_max in every band")

    @property
    def frequency_hz(self) -> np.ndarray:
        return self.omega / (2 * np.pi)

    def active(self) -> "SqueezingSpectrum":
        keep = ~self.flagged
        return SqueezingSpectrum(self.band_index[keep], self.omega[keep], self.v_min[keep],
                                 self.v_max[keep])


def to_decibel(v):
    """Linear power ratio to dB."""
    arr = np.asarray(v, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError("decibel conversion needs strictly positive input")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def from_decibel(db):
    arr = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(arr) if arr.ndim == 0 else arr


def band_center(band_index: int, config: AcquisitionConfig) -> float:
    """Angular center frequency of ``band_index``."""
    if not 0 <= band_index < config.n_bands:
        raise IndexError(f"band index {band_index} outside [0, {config.n_bands})")
    return 2 * math.pi * (band_index + 0.5) * config.band_width


def band_centers(config: AcquisitionConfig) -> np.ndarray:
    return 2 * np.pi * (np.arange(config.n_bands) + 0.5) * config.band_width
