"""Multimode homodyne tomography of squeezed light from a below-threshold OPA."""

from .core import (VACUUM_VARIANCE, AboveThresholdError, AcquisitionConfig, BroadbandTrace,
                   CalibrationError, DensityMatrix, OpaParams, QuadratureSamples,
                   SqueezingSpectrum, TraceKind, WignerGrid, band_center, band_centers,
                   from_decibel, to_decibel)
from .opa import band_variances, simulate_trace, simulate_vacuum_trace

__version__ = "0.1.0"

__all__ = ["VACUUM_VARIANCE", "AboveThresholdError", "AcquisitionConfig", "BroadbandTrace",
           "CalibrationError", "DensityMatrix", "OpaParams", "QuadratureSamples",
           "SqueezingSpectrum", "TraceKind", "WignerGrid", "band_center", "band_centers",
           "from_decibel", "to_decibel", "band_variances", "simulate_trace",
           "simulate_vacuum_trace"]
