"""Weighted least squares estimation of RMINAR(p) models.

The additive classes use the closed-form four-stage cascade: WLS for the
mean parameters, NNLS of squared residuals for the variance parameters,
then both again with data-driven weights.  The multiplicative class has a
closed-form mean stage and a nonlinear variance stage solved by a
multi-start simplex search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize

from . import numerics
from .errors import InnerOptFailed, InvalidSpec, NotSupported, TooShort
from .model import ModelClass, Series

__all__ = [
    "RegressorMatrices",
    "FitConfig",
    "FitResult",
    "build_regressors",
    "wls_theta_stage",
    "wls_lambda_stage",
    "four_stage_wls_additive",
    "two_stage_ls",
    "four_stage_wls_multiplicative",
    "multiplicative_triplet",
    "fit",
    "asymptotic_covariance_additive",
    "asymptotic_covariance_multiplicative",
    "multiplicative_variance_gradient",
    "nb2_shape_estimates",
    "dispersion_test",
]

WEIGHT_FLOOR = 1e-12
LINKS = ("free", "poisson", "geometric", "proportional")


@dataclass(frozen=True)
class RegressorMatrices:
    Ycal: np.ndarray  # rows (1, Y_{t-1}, ..., Y_{t-p})
    Zcal: np.ndarray  # rows (1, Y_{t-1}^2, ..., Y_{t-p}^2)
    y: np.ndarray  # responses Y_t, t = p+1..n

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p(self) -> int:
        return self.Ycal.shape[1] - 1


def build_regressors(series, p: int) -> RegressorMatrices:
    v = np.asarray(series.values if isinstance(series, Series) else series, dtype=float)
    if p < 1:
        raise ValueError("order p must be >= 1")
    if v.shape[0] < p + 1:
        raise TooShort(f"series of length {v.shape[0]} is too short for order {p}")
    n = v.shape[0] - p
    Y = np.ones((n, p + 1))
    for i in range(1, p + 1):
        Y[:, i] = v[p - i : p - i + n]
    return RegressorMatrices(Y, Y * Y, v[p:].copy())


def _normalized(w) -> np.ndarray:
    # dividing by the mean makes every stage exactly invariant to a common
    # rescaling of the weights and keeps the normal equations well scaled
    w = np.maximum(np.asarray(w, dtype=float), WEIGHT_FLOOR)
    return w / w.mean()


def wls_theta_stage(reg: RegressorMatrices, y, weights) -> np.ndarray:
    """Minimize sum (y_t - Ycal_t' theta)^2 / w_t."""
    w = _normalized(weights)
    X = reg.Ycal
    Xw = X / w[:, None]
    return numerics.solve(Xw.T @ X, Xw.T @ np.asarray(y, dtype=float))


def wls_lambda_stage(reg: RegressorMatrices, resid, weights_sq, *, return_active: bool = False):
    """NNLS fit of squared residuals on Zcal with weights 1 / w_t^2.

    ``resid`` are the mean-stage residuals, ``weights_sq`` the squared
    weights.
    """
    w = np.sqrt(_normalized(weights_sq))
    target = np.asarray(resid, dtype=float) ** 2
    return numerics.nnls(reg.Zcal / w[:, None], target / w, return_active=return_active)


# -- configuration and results --------------------------------------------------------

@dataclass
class FitConfig:
    model_class: ModelClass = ModelClass.ADDITIVE
    p: int = 1
    variance_link: str = "free"
    c: float | None = None
    lambda_star: np.ndarray | None = None
    theta_star: np.ndarray | None = None
    cascade_tol: float = 1e-6
    cascade_max_iters: int = 10
    inner_starts: int = 3
    inner_maxiter: int = 5000
    inner_tol: float = 1e-8

    def __post_init__(self):
        self.model_class = ModelClass(self.model_class)
        if self.p < 1:
            raise InvalidSpec("p", "order must be >= 1")
        if self.variance_link not in LINKS:
            raise InvalidSpec("variance_link", f"must be one of {LINKS}")
        if self.variance_link == "proportional":
            if self.c is None or not self.c > 0:
                raise InvalidSpec("c", "proportional link needs c > 0")
        k_lam = self.p + 2 if self.model_class is ModelClass.MULTIPLICATIVE else self.p + 1
        if self.lambda_star is None:
            self.lambda_star = np.ones(k_lam)
        self.lambda_star = np.asarray(self.lambda_star, dtype=float)
        if self.lambda_star.shape != (k_lam,):
            raise InvalidSpec("lambda_star", f"expected {k_lam} entries")
        if not np.all(self.lambda_star > 0):
            raise InvalidSpec("lambda_star", "entries must be strictly positive")
        if self.theta_star is None:
            self.theta_star = np.ones(self.p + 1)
        self.theta_star = np.asarray(self.theta_star, dtype=float)
        if self.theta_star.shape != (self.p + 1,):
            raise InvalidSpec("theta_star", f"expected {self.p + 1} entries")
        if self.cascade_tol <= 0 or self.cascade_max_iters < 1:
            raise InvalidSpec("cascade", "cascade_tol must be > 0 and cascade_max_iters >= 1")

    def link(self, theta) -> np.ndarray:
        """Variance parameters implied by the mean parameters under the link."""
        t = np.maximum(np.asarray(theta, dtype=float), 0.0)
        if self.variance_link == "poisson":
            return t
        if self.variance_link == "geometric":
            return t * (1 + t)
        if self.variance_link == "proportional":
            return self.c * t
        raise ValueError("free variance link has no mean-variance map")

    def link_derivative(self, theta) -> np.ndarray:
        t = np.asarray(theta, dtype=float)
        if self.variance_link == "poisson":
            return np.ones_like(t)
        if self.variance_link == "geometric":
            return 1 + 2 * t
        return np.full_like(t, self.c)


@dataclass
class FitResult:
    model_class: ModelClass
    p: int
    variance_link: str
    theta1: np.ndarray
    lambda1: np.ndarray
    theta2: np.ndarray
    lambda2: np.ndarray
    Sigma_hat: np.ndarray
    Omega_hat: np.ndarray
    ase_theta: np.ndarray
    ase_lambda: np.ndarray
    e: np.ndarray
    u: np.ndarray
    cascade_iterations: int
    converged: bool
    active_nonneg_constraints: np.ndarray
    orthogonality: dict = field(default_factory=dict)
    sigma_eps2: float | None = None
    gamma_hat: float | None = None
    inner_opt: dict = field(default_factory=dict)

    @property
    def n_eff(self) -> int:
        return self.e.shape[0]

    def _theta_lambda(self, stage: int):
        return (self.theta2, self.lambda2) if stage == 2 else (self.theta1, self.lambda1)

    def cond_mean(self, reg: RegressorMatrices, stage: int = 2) -> np.ndarray:
        theta, _ = self._theta_lambda(stage)
        m = reg.Ycal @ theta
        return m + 1.0 if self.model_class is ModelClass.MULTIPLICATIVE else m

    def cond_variance(self, reg: RegressorMatrices, stage: int = 2) -> np.ndarray:
        theta, lam = self._theta_lambda(stage)
        if self.model_class is ModelClass.MULTIPLICATIVE:
            return _mult_variance(reg, theta, lam)
        return reg.Zcal @ lam

    def to_dict(self) -> dict:
        def arr(a):
            return [float(x) for x in np.asarray(a).ravel()]

        def mat(a):
            return [arr(r) for r in np.asarray(a)]

        d = {
            "class": self.model_class.value,
            "p": self.p,
            "variance_link": self.variance_link,
            "theta1": arr(self.theta1),
            "lambda1": arr(self.lambda1),
            "theta2": arr(self.theta2),
            "lambda2": arr(self.lambda2),
            "ase_theta": arr(self.ase_theta),
            "ase_lambda": arr(self.ase_lambda),
            "Sigma_hat": mat(self.Sigma_hat),
            "Omega_hat": mat(self.Omega_hat),
            "cascade_iterations": self.cascade_iterations,
            "converged": bool(self.converged),
            "active_nonneg_constraints": [bool(x) for x in self.active_nonneg_constraints],
            "orthogonality": {k: float(v) for k, v in self.orthogonality.items()},
            "n_eff": self.n_eff,
        }
        if self.sigma_eps2 is not None:
            d["sigma_eps2"] = float(self.sigma_eps2)
        if self.gamma_hat is not None:
            d["gamma_hat"] = float(self.gamma_hat)
        return d


# -- orthogonality checks ----------------------------------------------------------

def _theta_orthogonality(X, y, theta, w) -> float:
    """Relative size of the WLS normal-equation residual sum X' e / w."""
    w = _normalized(w)
    e = y - X @ theta
    g = (X / w[:, None]).T @ e
    scale = (np.abs(X) / w[:, None]).T @ np.abs(y)
    return float(np.max(np.abs(g) / np.maximum(scale, np.finfo(float).tiny)))


def _lambda_orthogonality(G, target, fitted, w_sq, free) -> float:
    """Same check for the variance stage, restricted to unconstrained coordinates."""
    if not np.any(free):
        return 0.0
    w2 = _normalized(w_sq)
    G = G[:, free]
    g = (G / w2[:, None]).T @ (target - fitted)
    scale = (np.abs(G) / w2[:, None]).T @ np.abs(target)
    return float(np.max(np.abs(g) / np.maximum(scale, np.finfo(float).tiny)))


def _rel_change(new, old) -> float:
    return float(np.max(np.abs(new - old) / (1.0 + np.abs(old))))


# -- additive classes ---------------------------------------------------------------

def _check_domain(series, cfg: FitConfig):
    values = np.asarray(series.values if isinstance(series, Series) else series)
    if cfg.model_class is not ModelClass.ADDITIVE_Z and np.any(values < 0):
        raise InvalidSpec("series", f"class {cfg.model_class.value} needs a nonnegative series")


def four_stage_wls_additive(series, cfg: FitConfig) -> FitResult:
    if cfg.model_class is ModelClass.MULTIPLICATIVE:
        raise InvalidSpec("class", "use four_stage_wls_multiplicative for the multiplicative class")
    _check_domain(series, cfg)
    reg = build_regressors(series, cfg.p)
    X, Z, y = reg.Ycal, reg.Zcal, reg.y
    ortho: dict[str, float] = {}
    linked = cfg.variance_link != "free"

    def theta_stage(w, name):
        th = wls_theta_stage(reg, y, w)
        ortho[name] = _theta_orthogonality(X, y, th, w)
        return th

    def lambda_stage(th, w_sq, name):
        if linked:
            return cfg.link(th), np.zeros(cfg.p + 1, dtype=bool)
        lam, active = wls_lambda_stage(reg, y - X @ th, w_sq, return_active=True)
        ortho[name] = _lambda_orthogonality(Z, (y - X @ th) ** 2, Z @ lam, w_sq, ~active)
        return lam, active

    w_star = Z @ cfg.lambda_star
    theta1 = theta_stage(w_star, "theta1")
    lambda1, active = lambda_stage(theta1, w_star**2, "lambda1")

    theta2, lambda2 = theta1, lambda1
    converged = False
    iters = 0
    for iters in range(1, cfg.cascade_max_iters + 1):
        w = Z @ lambda2
        th_new = theta_stage(w, "theta2")
        lam_new, active = lambda_stage(th_new, w**2, "lambda2")
        change = max(_rel_change(th_new, theta2), _rel_change(lam_new, lambda2)) if iters > 1 else math.inf
        theta2, lambda2 = th_new, lam_new
        if change < cfg.cascade_tol:
            converged = True
            break

    e = y - X @ theta2
    u = e**2 - Z @ lambda2
    Sigma, Omega, ase_t, ase_l = asymptotic_covariance_additive(reg, theta2, lambda2, e)
    if linked:
        J = np.diag(cfg.link_derivative(theta2))
        Omega = J @ Sigma @ J
        ase_l = np.sqrt(np.maximum(np.diag(Omega), 0.0) / reg.n)
    return FitResult(
        model_class=cfg.model_class, p=cfg.p, variance_link=cfg.variance_link,
        theta1=theta1, lambda1=lambda1, theta2=theta2, lambda2=lambda2,
        Sigma_hat=Sigma, Omega_hat=Omega, ase_theta=ase_t, ase_lambda=ase_l,
        e=e, u=u, cascade_iterations=iters, converged=converged,
        active_nonneg_constraints=active, orthogonality=ortho,
    )


def two_stage_ls(series, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Unweighted least squares for theta followed by unweighted NNLS for lambda."""
    reg = build_regressors(series, p)
    ones = np.ones(reg.n)
    theta = wls_theta_stage(reg, reg.y, ones)
    lam = wls_lambda_stage(reg, reg.y - reg.Ycal @ theta, ones)
    return theta, lam


def asymptotic_covariance_additive(reg: RegressorMatrices, theta2, lambda2, residuals):
    """Plug-in sandwich matrices and asymptotic standard errors.

    Returns ``(Sigma_hat, Omega_hat, ase_theta, ase_lambda)`` where Sigma_hat
    estimates the covariance of sqrt(n)(theta - theta0) and Omega_hat that of
    sqrt(n)(lambda - lambda0).
    """
    X, Z = reg.Ycal, reg.Zcal
    n = reg.n
    e = np.asarray(residuals, dtype=float)
    v = np.maximum(Z @ np.asarray(lambda2, dtype=float), WEIGHT_FLOOR)
    u = e**2 - v
    A = (X / v[:, None]).T @ X / n
    C = (Z / (v**2)[:, None]).T @ Z / n
    D = (Z * (u**2 / v**4)[:, None]).T @ Z / n
    Sigma = _sym(numerics.solve(A, np.eye(A.shape[0])))
    Cinv = numerics.solve(C, np.eye(C.shape[0]))
    Omega = _sym(Cinv @ D @ Cinv)
    return Sigma, Omega, _ase(Sigma, n), _ase(Omega, n)


def _sym(M) -> np.ndarray:
    return 0.5 * (M + M.T)


def _ase(M, n) -> np.ndarray:
    return np.sqrt(np.maximum(np.diag(M), 0.0) / n)


# -- multiplicative class ---------------------------------------------------------

def _mult_variance(reg: RegressorMatrices, theta, lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    mu = 1.0 + reg.Ycal @ np.asarray(theta, dtype=float)
    return (lam[0] + 1) * (reg.Zcal @ lam[1:]) + lam[0] * mu**2


def multiplicative_variance_gradient(reg: RegressorMatrices, theta, lam) -> np.ndarray:
    """Rows dV_t / d(sigma2_eps, sigma2_omega, sigma2_phi_1..)."""
    lam = np.asarray(lam, dtype=float)
    mu = 1.0 + reg.Ycal @ np.asarray(theta, dtype=float)
    return np.column_stack([reg.Zcal @ lam[1:] + mu**2, (lam[0] + 1) * reg.Zcal])


def _mult_lambda_stage(reg: RegressorMatrices, theta, w_sq, cfg: FitConfig):
    """Minimize sum (e_t^2 - V_t(theta, lam))^2 / w_t^2 over lam >= 0.

    Simplex search on s with lam = s*s from several starts.  V is linear in
    (sigma2_eps, (sigma2_eps + 1) * Delta), so an exact NNLS solution in
    those coordinates serves as the moment start; every start and every
    simplex end point is a candidate and the lowest objective wins.
    """
    w2 = np.sqrt(_normalized(w_sq))
    mu = 1.0 + reg.Ycal @ theta
    target = (reg.y - mu) ** 2

    def objective(lam):
        r = (target - _mult_variance(reg, theta, lam)) / w2
        return float(r @ r)

    # moment start: linear reparameterization
    G = np.column_stack([mu**2, reg.Zcal])
    b = numerics.nnls(G / w2[:, None], target / w2)
    lam_mom = np.concatenate([[b[0]], b[1:] / (b[0] + 1)])
    # additive-style start: variance regression on Zcal, then the triplet sigma2
    delta = numerics.nnls(reg.Zcal / w2[:, None], target / w2)
    d2 = reg.Zcal @ delta
    s2 = max(float(np.mean((target - d2) / np.maximum(d2 + mu**2, WEIGHT_FLOOR))), 0.0)
    lam_add = np.concatenate([[s2], delta / (s2 + 1)])
    starts = [lam_mom, lam_add, np.ones_like(lam_mom)][: cfg.inner_starts]

    f0 = max(objective(starts[-1]), np.finfo(float).tiny)
    candidates = [(objective(s), s) for s in starts]
    successes = 0
    for lam0 in starts:
        x0 = np.sqrt(np.maximum(lam0, 0.0))
        x0 = np.where(x0 == 0, 1e-3, x0)
        res = scipy.optimize.minimize(
            lambda s: objective(s * s) / f0, x0, method="Nelder-Mead",
            options={"maxiter": cfg.inner_maxiter, "maxfev": 2 * cfg.inner_maxiter,
                     "xatol": 1e-10, "fatol": cfg.inner_tol},
        )
        successes += bool(res.success)
        candidates.append((objective(res.x * res.x), res.x * res.x))
    if successes == 0:
        raise InnerOptFailed("every simplex start hit the iteration cap")
    best_val, best = min(candidates, key=lambda c: c[0])
    # simplex end points can tie the exact start to rounding while leaving
    # boundary coordinates at 1e-14 instead of 0; keep the exact one then
    if candidates[0][0] <= best_val * (1 + 1e-10):
        best_val, best = candidates[0]
    free = best > 0
    ortho = _lambda_orthogonality(
        multiplicative_variance_gradient(reg, theta, best), target,
        _mult_variance(reg, theta, best), w_sq, free,
    )
    info = {"objective": best_val, "starts": len(starts), "successes": successes}
    return best, ~free, ortho, info


def four_stage_wls_multiplicative(series, cfg: FitConfig) -> FitResult:
    if cfg.model_class is not ModelClass.MULTIPLICATIVE:
        raise InvalidSpec("class", "use four_stage_wls_additive for the additive classes")
    if cfg.variance_link != "free":
        return multiplicative_triplet(series, cfg)
    _check_domain(series, cfg)
    reg = build_regressors(series, cfg.p)
    X, y1 = reg.Ycal, reg.y - 1.0
    ortho: dict[str, float] = {}

    def theta_stage(w, name):
        th = wls_theta_stage(reg, y1, w)
        ortho[name] = _theta_orthogonality(X, y1, th, w)
        return th

    w_star = _mult_variance(reg, cfg.theta_star, cfg.lambda_star)
    theta1 = theta_stage(w_star, "theta1")
    lambda1, active, ortho["lambda1"], info = _mult_lambda_stage(reg, theta1, w_star**2, cfg)

    # one pass of stages iii/iv: refreshing the weights again tends to flip
    # between two variance fits instead of settling
    w = _mult_variance(reg, theta1, lambda1)
    theta2 = theta_stage(w, "theta2")
    lambda2, active, ortho["lambda2"], info = _mult_lambda_stage(reg, theta2, w**2, cfg)

    e = y1 - X @ theta2
    Sigma, Omega, ase_t, ase_l = asymptotic_covariance_multiplicative(reg, theta2, lambda2, e)
    v = _mult_variance(reg, theta2, lambda2)
    return FitResult(
        model_class=cfg.model_class, p=cfg.p, variance_link="free",
        theta1=theta1, lambda1=lambda1, theta2=theta2, lambda2=lambda2,
        Sigma_hat=Sigma, Omega_hat=Omega, ase_theta=ase_t, ase_lambda=ase_l,
        e=e, u=e**2 - v, cascade_iterations=1, converged=True,
        active_nonneg_constraints=active, orthogonality=ortho,
        sigma_eps2=float(lambda2[0]), inner_opt=info,
    )


def multiplicative_triplet(series, cfg: FitConfig) -> FitResult:
    """Closed-form fit when the intercept and coefficient variances are a function of their means."""
    if cfg.model_class is not ModelClass.MULTIPLICATIVE:
        raise InvalidSpec("class", "the triplet estimator is for the multiplicative class")
    if cfg.variance_link == "free":
        raise InvalidSpec("variance_link", "the triplet needs a poisson, geometric or proportional link")
    _check_domain(series, cfg)
    reg = build_regressors(series, cfg.p)
    X, Z, y1 = reg.Ycal, reg.Zcal, reg.y - 1.0
    ortho: dict[str, float] = {}

    w_star = _mult_variance(reg, cfg.theta_star, cfg.lambda_star)
    theta1 = wls_theta_stage(reg, y1, w_star)
    ortho["theta1"] = _theta_orthogonality(X, y1, theta1, w_star)
    mu = 1.0 + X @ theta1
    d2 = Z @ cfg.link(theta1)
    s2 = float(np.mean(((reg.y - mu) ** 2 - d2) / np.maximum(d2 + mu**2, WEIGHT_FLOOR)))
    lambda1 = np.concatenate([[s2], cfg.link(theta1)])
    w = _mult_variance(reg, theta1, np.concatenate([[max(s2, 0.0)], cfg.link(theta1)]))
    theta2 = wls_theta_stage(reg, y1, w)
    ortho["theta2"] = _theta_orthogonality(X, y1, theta2, w)
    lambda2 = np.concatenate([[s2], cfg.link(theta2)])

    denom = np.maximum(d2 + mu**2, WEIGHT_FLOOR)
    gamma = float(np.mean((((reg.y - mu) ** 2 - (d2 + denom * s2)) / denom) ** 2))
    e = y1 - X @ theta2
    v = np.maximum(_mult_variance(reg, theta2, lambda2), WEIGHT_FLOOR)
    A = (X / v[:, None]).T @ X / reg.n
    Sigma = _sym(numerics.solve(A, np.eye(A.shape[0])))
    J = np.diag(cfg.link_derivative(theta2))
    Omega = np.zeros((cfg.p + 2, cfg.p + 2))
    Omega[0, 0] = gamma
    Omega[1:, 1:] = J @ Sigma @ J
    return FitResult(
        model_class=cfg.model_class, p=cfg.p, variance_link=cfg.variance_link,
        theta1=theta1, lambda1=lambda1, theta2=theta2, lambda2=lambda2,
        Sigma_hat=Sigma, Omega_hat=Omega, ase_theta=_ase(Sigma, reg.n), ase_lambda=_ase(Omega, reg.n),
        e=e, u=e**2 - v, cascade_iterations=1, converged=True,
        active_nonneg_constraints=np.zeros(cfg.p + 2, dtype=bool), orthogonality=ortho,
        sigma_eps2=s2, gamma_hat=gamma, inner_opt={"objective": None, "starts": 0, "successes": 0},
    )


def asymptotic_covariance_multiplicative(reg: RegressorMatrices, theta2, lambda2, residuals):
    n = reg.n
    X = reg.Ycal
    e = np.asarray(residuals, dtype=float)
    v = np.maximum(_mult_variance(reg, theta2, lambda2), WEIGHT_FLOOR)
    g = multiplicative_variance_gradient(reg, theta2, lambda2)
    u = e**2 - v
    A = (X / v[:, None]).T @ X / n
    C = (g / (v**2)[:, None]).T @ g / n
    D = (g * (u**2 / v**4)[:, None]).T @ g / n
    Sigma = _sym(numerics.solve(A, np.eye(A.shape[0])))
    Cinv = numerics.solve(C, np.eye(C.shape[0]))
    Omega = _sym(Cinv @ D @ Cinv)
    return Sigma, Omega, _ase(Sigma, n), _ase(Omega, n)


def fit(series, cfg: FitConfig) -> FitResult:
    if cfg.model_class is ModelClass.MULTIPLICATIVE:
        return four_stage_wls_multiplicative(series, cfg)
    return four_stage_wls_additive(series, cfg)


# -- post-fit statistics ------------------------------------------------------------

def _pairs(theta, lam, model_class):
    theta = np.asarray(theta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if ModelClass(model_class) is ModelClass.MULTIPLICATIVE:
        return np.concatenate([[1.0], theta]), lam
    return theta, lam


def nb2_shape_estimates(theta2, lambda2, model_class=ModelClass.ADDITIVE) -> list[float | None]:
    """Shape r of an NB2 law matching each fitted (mean, variance) pair.

    Uses variance = m (1 + m / r), so r = m^2 / (variance - m).  A coordinate
    without overdispersion yields None.  For the multiplicative class the
    innovation mean is 1 by construction.
    """
    means, variances = _pairs(theta2, lambda2, model_class)
    out: list[float | None] = []
    for m, s2 in zip(means, variances):
        out.append(float(m * m / (s2 - m)) if s2 > m and m > 0 else None)
    return out


def dispersion_test(theta2, lambda2, Sigma_hat, Omega_hat, kind: str, n: int) -> np.ndarray:
    """z statistics for lambda_j = g(theta_j), g the identity (poisson) or t(1+t) (geometric).

    The covariance between the mean and variance estimates is ignored.
    """
    theta2 = np.asarray(theta2, dtype=float)
    lambda2 = np.asarray(lambda2, dtype=float)
    if lambda2.shape != theta2.shape:
        raise NotSupported("dispersion tests are defined for the additive classes")
    if kind == "poisson":
        g, dg = theta2, np.ones_like(theta2)
    elif kind == "geometric":
        g, dg = theta2 * (1 + theta2), 1 + 2 * theta2
    else:
        raise ValueError(f"unknown kind {kind!r}")
    var = (np.diag(Omega_hat) + dg**2 * np.diag(Sigma_hat)) / n
    d = lambda2 - g
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(var > 0, d / np.sqrt(np.maximum(var, 0.0)), np.where(d == 0, 0.0, np.sign(d) * np.inf))
    return z
