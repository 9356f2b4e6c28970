"""Numerical laboratory for the stability of critical pulled fronts in the
two-species Lotka-Volterra competition system.

The package builds the front profile moving at the linear spreading speed,
certifies spectral stability of the weighted linearization through an Evans
function and resolvent-kernel computations, and reproduces the algebraic
t^(-3/2) decay of weighted perturbations in direct simulation.
"""

from .model import (
    ModelParameters,
    DerivedConstants,
    WeightFunction,
    SpectralPoint,
    validate_parameters,
    derive_constants,
    admissible_delta_range,
    spectral_margin,
    fredholm_borders,
    sector_contains,
    asymptotic_eigendata,
    compute_M_s,
)

__all__ = [
    "ModelParameters",
    "DerivedConstants",
    "WeightFunction",
    "SpectralPoint",
    "validate_parameters",
    "derive_constants",
    "admissible_delta_range",
    "spectral_margin",
    "fredholm_borders",
    "sector_contains",
    "asymptotic_eigendata",
    "compute_M_s",
]

__version__ = "0.1.0"
