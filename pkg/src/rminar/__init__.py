"""Random multiplication integer-valued autoregressions (RMINAR).

Simulation, moment and tail theory, four-stage weighted least squares
estimation, diagnostics and Monte Carlo studies for three model classes:
additive N0-valued, additive Z-valued and multiplicative-error.
"""

from .distributions import (
    NB1, NB2, Bernoulli, Binomial, DistSpec, Geometric, PointMass, Poisson, Skellam, TwoPoint,
)
from .estimation import FitConfig, FitResult, fit
from .model import ModelClass, ModelSpec, Series, simulate, validate

__version__ = "0.1.0"

__all__ = [
    "Bernoulli", "Binomial", "DistSpec", "Geometric", "NB1", "NB2", "PointMass", "Poisson",
    "Skellam", "TwoPoint", "FitConfig", "FitResult", "fit", "ModelClass", "ModelSpec",
    "Series", "simulate", "validate",
]
