"""Exact and asymptotic distributional quantities for Cox processes driven by
Poisson shot-noise intensity."""

from .cgf import CgfContext, eta, eta_deriv, eta_finite, modphi_gap, phi, psi
from .errors import (
    ConvergenceError,
    DomainError,
    NoiseFloorWarning,
    NumericalError,
    QuadratureError,
    ShotCoxError,
    UnsupportedKernelError,
)
from .model import BoxCar, Exponential, ModelParams, PowerLaw, Tabulated, Zero, standard_model

__version__ = "0.1.0"

__all__ = [
    "BoxCar",
    "CgfContext",
    "ConvergenceError",
    "DomainError",
    "Exponential",
    "ModelParams",
    "NoiseFloorWarning",
    "NumericalError",
    "PowerLaw",
    "QuadratureError",
    "ShotCoxError",
    "Tabulated",
    "UnsupportedKernelError",
    "Zero",
    "eta",
    "eta_deriv",
    "eta_finite",
    "modphi_gap",
    "phi",
    "psi",
    "standard_model",
]
