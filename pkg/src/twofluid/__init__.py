"""Verification toolkit and desk-scale simulator for a compressible
viscous-capillary two-fluid model.

Submodules: model (equilibrium algebra), spectral (Fourier-symbol spectra),
greens (physical-space kernel reconstruction), waveconv (wave-pattern
convolution certification), sim (linear and nonlinear evolution), cli.
"""

from . import model  # noqa: F401

__version__ = "0.1.0"
