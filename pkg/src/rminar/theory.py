"""Moment stationarity, unconditional moments, tail index and Lyapunov exponent."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from . import numerics
from .distributions import DistSpec
from .errors import DegenerateTail, NotSupported
from .model import ModelClass, ModelSpec, Series, _draw_inputs, validate

__all__ = [
    "StationarityReport",
    "TailReport",
    "LyapunovReport",
    "mean_companion",
    "second_moment_companion",
    "unconditional_moments",
    "stationarity_report",
    "tail_index",
    "lyapunov_mc",
    "hill_tail_estimate",
    "fourth_moment_check",
    "ar_unit_variance",
    "generated_moments",
]

# a spectral radius this close to 1 counts as 1: companion matrices with
# sum(phi) = 1 have a unit root that eigvals returns with rounding error
_UNIT = 1 - 1e-10


@dataclass(frozen=True)
class StationarityReport:
    rho_mean: float
    rho_m2: float | None
    mean_exists: bool
    second_moment_exists: bool | None
    uncond_mean: float
    uncond_variance: float | None


@dataclass(frozen=True)
class TailReport:
    tau1: float | None
    mode: str
    bracket: tuple[float, float]
    solver_iterations: int


@dataclass(frozen=True)
class LyapunovReport:
    gamma: float  # -inf when the top exponent is analytically -infinity
    std_error: float
    horizon: int
    replications: int

    @property
    def is_minus_infinity(self) -> bool:
        return self.gamma == -math.inf


def mean_companion(phi) -> np.ndarray:
    """E(A_t): companion matrix of the coefficient means."""
    phi = np.asarray(phi, dtype=float)
    p = phi.shape[0]
    A = np.zeros((p, p))
    A[0] = phi
    if p > 1:
        A[1:, :-1] = np.eye(p - 1)
    return A


def second_moment_companion(phi, sigma2_phi) -> np.ndarray:
    """E(A_t kron A_t) for independent random first-row entries.

    Only the (0, 0)-block diagonal picks up variance terms:
    E(Phi_j Phi_l) = phi_j phi_l + [j == l] sigma2_j.
    """
    phi = np.asarray(phi, dtype=float)
    s2 = np.asarray(sigma2_phi, dtype=float)
    p = phi.shape[0]
    A = mean_companion(phi)
    K = numerics.kronecker(A, A)
    for j in range(p):
        K[0, j * p + j] += s2[j]
    return K


def unconditional_moments(theta, lam) -> tuple[float, float]:
    """Unconditional mean and variance of an additive RMINAR(p).

    Returns +inf for a moment that does not exist.  The variance is the
    first entry of Gamma_Y solving
    vec(Gamma) = (I - E(A kron A))^-1 ((E(A kron A) - EA kron EA) vec(mu mu') + vec(Gamma_Xi)).
    """
    theta = np.asarray(theta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    mu_eps, phi = theta[0], theta[1:]
    s2_eps, s2_phi = lam[0], lam[1:]
    p = phi.shape[0]
    EA = mean_companion(phi)
    if numerics.spectral_radius(EA) >= _UNIT:
        return math.inf, math.inf
    m = mu_eps / (1 - phi.sum())
    EAA = second_moment_companion(phi, s2_phi)
    if numerics.spectral_radius(EAA) >= _UNIT:
        return float(m), math.inf
    mu = np.full(p, m)
    gamma_xi = np.zeros((p, p))
    gamma_xi[0, 0] = s2_eps
    rhs = (EAA - numerics.kronecker(EA, EA)) @ np.outer(mu, mu).ravel(order="F") + gamma_xi.ravel(order="F")
    vec_gamma = numerics.solve(np.eye(p * p) - EAA, rhs)
    return float(m), float(vec_gamma[0])


def ar_unit_variance(phi) -> float:
    """Variance of a stationary AR(p) with these coefficients and unit noise variance."""
    EA = mean_companion(phi)
    p = EA.shape[0]
    if numerics.spectral_radius(EA) >= _UNIT:
        return math.inf
    e1 = np.zeros((p, p))
    e1[0, 0] = 1.0
    vec = numerics.solve(np.eye(p * p) - numerics.kronecker(EA, EA), e1.ravel(order="F"))
    return float(vec[0])


def generated_moments(theta, lam, model_class) -> tuple[float, float]:
    """Unconditional mean and variance implied by fitted parameters.

    Both classes are weak AR(p) processes Y_t = mu_t + u_t with u_t a
    martingale difference, so gamma_0 = psi * E(u_t^2) with psi the unit
    noise AR variance.  E(u_t^2) is affine in gamma_0, giving a closed form.
    Moments that do not exist are returned as +inf.
    """
    theta = np.asarray(theta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    phi = theta[1:]
    if numerics.spectral_radius(mean_companion(phi)) >= _UNIT:
        return math.inf, math.inf
    if ModelClass(model_class) is ModelClass.MULTIPLICATIVE:
        m = (1 + theta[0]) / (1 - phi.sum())
        s2_eps, s2_omega, s2_phi = lam[0], lam[1], lam[2:]
        b = s2_phi.sum() + s2_eps / (1 + s2_eps)
        a = s2_omega + b * m * m
    else:
        m = theta[0] / (1 - phi.sum())
        b = lam[1:].sum()
        a = lam[0] + b * m * m
    psi = ar_unit_variance(phi)
    if psi * b >= 1:
        return float(m), math.inf
    return float(m), float(psi * a / (1 - psi * b))


def stationarity_report(spec: ModelSpec) -> StationarityReport:
    validate(spec)
    theta, lam = spec.theta(), spec.lam()
    phi = theta[1:]
    rho1 = numerics.spectral_radius(mean_companion(phi))
    mean_exists = rho1 < _UNIT
    if spec.model_class is ModelClass.MULTIPLICATIVE:
        # E(eps Phi_i) = phi_i, so the mean recursion matches the additive one
        m, v = generated_moments(theta, lam, spec.model_class)
        return StationarityReport(rho1, None, mean_exists, None, m, v)
    rho2 = numerics.spectral_radius(second_moment_companion(phi, lam[1:]))
    m, v = unconditional_moments(theta, lam)
    return StationarityReport(rho1, rho2, mean_exists, rho2 < _UNIT, m, v)


def second_moment_matrix(spec: ModelSpec) -> np.ndarray:
    """E(A_t kron A_t) for the additive classes."""
    if spec.model_class is ModelClass.MULTIPLICATIVE:
        raise NotSupported("second-order moment matrix is provided for the additive classes only")
    return second_moment_companion(spec.theta()[1:], spec.lam()[1:])


def fourth_moment_check(spec: ModelSpec) -> dict:
    """Literal check of the moment condition E(Phi_i^4) < 1 used for asymptotic normality.

    Returns per-coefficient fourth absolute moments and the flag; emits a
    warning (never an error) when the condition fails.
    """
    m4 = [d.power_moment(4.0) for d in spec.coeff_dists]
    ok = all(v < 1 for v in m4)
    if not ok:
        warnings.warn("E(Phi_i^4) < 1 fails for at least one coefficient", stacklevel=2)
    return {"fourth_moments": m4, "satisfied": ok}


# -- tail index -------------------------------------------------------------------

class _ProductLaw:
    """Law of eps * Phi for independent eps, Phi (power moments only)."""

    def __init__(self, a: DistSpec, b: DistSpec):
        self.a, self.b = a, b

    def power_moment(self, tau, tol=1e-10):
        # |eps Phi|^tau = |eps|^tau |Phi|^tau and independence factorizes
        # the expectation for both signed and unsigned laws.
        return self.a.power_moment(tau, tol) * self.b.power_moment(tau, tol)


def tail_index(spec: ModelSpec, mode: str = "raw", bracket_hi: float = 50.0,
               tol: float = 1e-10) -> TailReport:
    """Solve E(|Phi|^tau) = 1 for tau in (1e-6, bracket_hi).

    ``mode`` is ``raw`` (N0 coefficient), ``absolute`` (Z coefficient) or
    ``product_with_innovation`` (multiplicative class, law of eps * Phi).
    Returns tau1 = None when the moment never reaches 1 on the bracket.
    """
    if spec.p != 1:
        raise NotSupported("the scalar tail equation is solved for p = 1 only")
    phi = spec.coeff_dists[0]
    if mode in ("raw", "absolute"):
        if mode == "raw" and phi.signed:
            raise ValueError("raw mode needs an N0-valued coefficient; use mode='absolute'")
        law = phi
    elif mode == "product_with_innovation":
        law = _ProductLaw(spec.innov_dist, phi)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    lo = 1e-6

    def f(tau):
        return law.power_moment(tau, tol) - 1.0

    hi = bracket_hi
    f_lo = f(lo)
    try:
        f_hi = f(hi)
    except Exception:
        # moment blew up at the top of the bracket: shrink until finite
        while True:
            hi /= 2
            if hi <= lo:
                raise
            try:
                f_hi = f(hi)
                break
            except Exception:
                continue
    if f_lo >= 0 or f_hi < 0:
        return TailReport(None, mode, (lo, bracket_hi), 0)
    tau1, info = scipy.optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                                      maxiter=500, full_output=True)
    return TailReport(float(tau1), mode, (lo, hi), int(info.iterations))


# -- Lyapunov exponent ------------------------------------------------------------------

def lyapunov_mc(spec: ModelSpec, horizon: int = 5000, reps: int = 200, seed: int = 0) -> LyapunovReport:
    """Top Lyapunov exponent of the random companion products.

    p = 1 with P(Phi = 0) > 0 gives -inf analytically and degenerate inputs
    give log rho(A) of the fixed matrix; otherwise averages
    (1/T) log ||A_1 ... A_T|| over replications with infinity-norm
    renormalization each step.  A product hitting exactly zero counts as -inf.
    """
    validate(spec)
    p = spec.p
    mult = spec.model_class is ModelClass.MULTIPLICATIVE
    laws = list(spec.coeff_dists) + ([spec.innov_dist] if mult else [])
    if all(d.finite_support() is not None and len(d.finite_support()) == 1 for d in laws):
        row = np.array([d.mean() for d in spec.coeff_dists]) * (spec.innov_dist.mean() if mult else 1.0)
        rho = numerics.spectral_radius(mean_companion(row))
        return LyapunovReport(math.log(rho) if rho > 0 else -math.inf, 0.0, 0, 0)
    if p == 1:
        zero_mass = spec.coeff_dists[0].prob_zero() > 0
        if mult:
            zero_mass = zero_mass or spec.innov_dist.prob_zero() > 0
        if zero_mass:
            return LyapunovReport(-math.inf, 0.0, 0, 0)
    root = np.random.SeedSequence(seed)
    gammas = np.empty(reps)
    for r, child in enumerate(root.spawn(reps)):
        rng = np.random.default_rng(child)
        coeffs, innov, _ = _draw_inputs(spec, rng, horizon)
        rows = coeffs.astype(float)
        if mult:
            rows = rows * innov[:, None]
        M = np.eye(p)
        log_norm = 0.0
        for t in range(horizon):
            A = mean_companion(rows[t])
            M = A @ M
            s = np.max(np.sum(np.abs(M), axis=1))
            if s == 0.0:
                log_norm = -math.inf
                break
            M /= s
            log_norm += math.log(s)
        gammas[r] = log_norm / horizon
    if np.any(np.isneginf(gammas)):
        return LyapunovReport(-math.inf, 0.0, horizon, reps)
    se = float(gammas.std(ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0
    return LyapunovReport(float(gammas.mean()), se, horizon, reps)


# -- empirical tail ----------------------------------------------------------------------

def hill_tail_estimate(series, k_fraction: float = 0.01) -> float:
    """Hill estimate of the tail index from the top ceil(k_fraction * n) values of |Y_t|."""
    y = np.abs(np.asarray(series.values if isinstance(series, Series) else series, dtype=float))
    n = y.shape[0]
    if n < 1000:
        raise ValueError("Hill estimation needs at least 1000 observations")
    if not 0 < k_fraction <= 0.1:
        raise ValueError("k_fraction must lie in (0, 0.1]")
    k = math.ceil(k_fraction * n)
    top = np.sort(y)[::-1][: k + 1]
    if top[k] <= 0:
        raise DegenerateTail("threshold order statistic is zero")
    h = float(np.mean(np.log(top[:k] / top[k])))
    if h <= 0:
        raise DegenerateTail("top order statistics are all equal")
    return 1.0 / h
