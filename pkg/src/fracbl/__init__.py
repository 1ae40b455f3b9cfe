"""Pseudospectral solver and diagnostics for the fractional Buckley-Leverett equation

    u_t + (u^2 / (u^2 + M (1-u)^2))_x = -nu Lambda^alpha u - mu Lambda^beta u_t

on the periodic interval [-pi, pi).
"""
from .errors import ConfigurationError, NumericalError, ParameterDomainError
from .flux import Parameters
from .spectral import Grid, SpectralField

__all__ = [
    "ConfigurationError",
    "Grid",
    "NumericalError",
    "Parameters",
    "ParameterDomainError",
    "SpectralField",
]

__version__ = "0.1.0"
