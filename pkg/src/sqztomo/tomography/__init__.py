"""Density-matrix and Wigner-function reconstruction from quadrature samples."""

from .kernel import PatternKernel, oscillator_wavefunctions, pattern_kernel
from .states import (DEFAULT_NMAX, PhotonDistribution, estimate_density_matrix,
                     gaussian_state_density, has_parity_oscillation, oscillation_signature,
                     photon_distribution)
from .wigner import (Tomogram, marginal_histogram, ramp_kernel, wigner_backprojection,
                     wigner_from_density)

__all__ = ["PatternKernel", "oscillator_wavefunctions", "pattern_kernel", "DEFAULT_NMAX",
           "PhotonDistribution", "estimate_density_matrix", "gaussian_state_density",
           "has_parity_oscillation", "oscillation_signature", "photon_distribution", "Tomogram",
           "marginal_histogram", "ramp_kernel", "wigner_backprojection", "wigner_from_density"]
