"""Random sum versus random multiplication of an integer operand.

``random_sum`` adds ``X`` iid summands (generalized thinning);
``random_mult`` draws a single multiplier and returns ``Phi * X``.  Both
share the conditional mean ``a * X``, but the conditional variance grows
like ``X`` for the sum and like ``X**2`` for the product.  The model
module only uses the product; the sum is kept for comparison and tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import DistSpec
from .errors import InvalidInput, NegativeOperand

__all__ = ["OperatorMoments", "random_sum", "random_mult", "rso_moments", "rmo_moments"]


@dataclass(frozen=True)
class OperatorMoments:
    mean: float
    variance: float
    cond_mean_coeff: float
    cond_var_coeff: float
    cond_var_power: int  # 1 for the random sum, 2 for the random product


def random_sum(summand: DistSpec, X: int, rng: np.random.Generator) -> int:
    """Sum of ``X`` iid draws from ``summand`` (0 when X = 0)."""
    X = int(X)
    if X < 0:
        raise NegativeOperand(f"random sum needs X >= 0, got {X}")
    if summand.signed:
        raise InvalidInput("random sum summands must be N0-valued")
    if X == 0:
        return 0
    return int(np.sum(summand.sample(rng, size=X)))


def random_mult(multiplier: DistSpec, X: int, rng: np.random.Generator) -> int:
    """One draw ``Phi`` from ``multiplier``, returned as ``Phi * X``."""
    return int(multiplier.sample(rng)) * int(X)


def _check_moments(X_mean: float, X_var: float, X_second: float) -> None:
    if X_var < 0:
        raise InvalidInput("X_var must be >= 0")
    if abs(X_second - (X_var + X_mean**2)) > 1e-9 * max(1.0, abs(X_second)):
        raise InvalidInput("X_second must equal X_var + X_mean**2")


def rso_moments(summand: DistSpec, X_mean: float, X_var: float, X_second: float) -> OperatorMoments:
    _check_moments(X_mean, X_var, X_second)
    a, s2 = summand.mean(), summand.variance()
    return OperatorMoments(
        mean=a * X_mean,
        variance=s2 * X_mean + a**2 * X_var,
        cond_mean_coeff=a,
        cond_var_coeff=s2,
        cond_var_power=1,
    )


def rmo_moments(multiplier: DistSpec, X_mean: float, X_var: float, X_second: float) -> OperatorMoments:
    _check_moments(X_mean, X_var, X_second)
    phi, s2 = multiplier.mean(), multiplier.variance()
    return OperatorMoments(
        mean=phi * X_mean,
        variance=s2 * X_second + phi**2 * X_var,
        cond_mean_coeff=phi,
        cond_var_coeff=s2,
        cond_var_power=2,
    )
