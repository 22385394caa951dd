"""Model specification and exact simulation of RMINAR(p) processes.

Three classes share the random-coefficient recursion

* ``additive``        Y_t = sum_i Phi_it Y_{t-i} + eps_t            (N0-valued)
* ``additive-z``      same recursion with Z-valued inputs
* ``multiplicative``  Y_t = (1 + omega_t + sum_i Phi_it Y_{t-i}) eps_t

where every input is an independent iid integer sequence.  Parameters are
ordered as in the estimators: additive ``theta = (mu_eps, phi_1..phi_p)``,
``lam = (sigma2_eps, sigma2_phi_1..)``; multiplicative
``theta = (omega, phi_1..)``, ``lam = (sigma2_eps, sigma2_omega, sigma2_phi_1..)``.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .distributions import DistSpec, dist_from_dict
from .errors import InvalidSpec, Overflow

__all__ = [
    "ModelClass",
    "ModelSpec",
    "Series",
    "ValidationReport",
    "CompanionDraw",
    "validate",
    "simulate",
    "conditional_mean",
    "conditional_variance",
    "draw_companion",
    "draw_step",
    "draw_steps",
    "companion_from_inputs",
    "transition_probability",
    "zero_product_frequency",
]

_OVERFLOW = 2**62
_MEAN_ONE_TOL = 1e-9


class ModelClass(str, enum.Enum):
    ADDITIVE = "additive"
    ADDITIVE_Z = "additive-z"
    MULTIPLICATIVE = "multiplicative"

    @property
    def is_additive(self) -> bool:
        return self is not ModelClass.MULTIPLICATIVE


@dataclass(frozen=True)
class ModelSpec:
    model_class: ModelClass
    coeff_dists: tuple[DistSpec, ...]
    innov_dist: DistSpec
    intercept_dist: DistSpec | None = None

    def __post_init__(self):
        object.__setattr__(self, "model_class", ModelClass(self.model_class))
        object.__setattr__(self, "coeff_dists", tuple(self.coeff_dists))

    @property
    def p(self) -> int:
        return len(self.coeff_dists)

    def theta(self) -> np.ndarray:
        """True mean parameters in estimator order."""
        head = self.intercept_dist.mean() if self.model_class is ModelClass.MULTIPLICATIVE else self.innov_dist.mean()
        return np.array([head] + [d.mean() for d in self.coeff_dists])

    def lam(self) -> np.ndarray:
        """True variance parameters in estimator order."""
        coeff = [d.variance() for d in self.coeff_dists]
        if self.model_class is ModelClass.MULTIPLICATIVE:
            return np.array([self.innov_dist.variance(), self.intercept_dist.variance()] + coeff)
        return np.array([self.innov_dist.variance()] + coeff)

    def to_dict(self) -> dict:
        d = {
            "class": self.model_class.value,
            "coefficients": [c.to_dict() for c in self.coeff_dists],
            "innovation": self.innov_dist.to_dict(),
        }
        if self.intercept_dist is not None:
            d["intercept"] = self.intercept_dist.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        allowed = {"class", "coefficients", "innovation", "intercept"}
        unknown = set(d) - allowed
        if unknown:
            raise InvalidSpec("model", f"unknown key(s) {sorted(unknown)}")
        for key in ("class", "coefficients", "innovation"):
            if key not in d:
                raise InvalidSpec("model", f"missing key {key!r}")
        try:
            mc = ModelClass(d["class"])
        except ValueError:
            raise InvalidSpec("class", f"unknown model class {d['class']!r}") from None
        coeffs = d["coefficients"]
        if not isinstance(coeffs, list) or not coeffs:
            raise InvalidSpec("coefficients", "must be a non-empty list")
        spec = cls(
            model_class=mc,
            coeff_dists=tuple(dist_from_dict(c) for c in coeffs),
            innov_dist=dist_from_dict(d["innovation"]),
            intercept_dist=dist_from_dict(d["intercept"]) if "intercept" in d else None,
        )
        validate(spec)
        return spec

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Series:
    values: np.ndarray
    domain: str = "N0"  # "N0" or "Z"
    seed: int | None = None
    spec_digest: str | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.ndim != 1:
            raise ValueError("series values must be one-dimensional")
        if self.domain not in ("N0", "Z"):
            raise ValueError(f"domain must be 'N0' or 'Z', got {self.domain!r}")
        if self.domain == "N0" and np.any(self.values < 0):
            raise ValueError("N0 series contains negative values")

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_values(cls, values) -> "Series":
        v = np.asarray(values, dtype=np.int64)
        return cls(v, "Z" if np.any(v < 0) else "N0")


@dataclass(frozen=True)
class ValidationReport:
    a0: bool  # P(Phi_i = 0) > 0 for every coefficient
    a0_innovation: bool | None = None  # P(eps = 0) > 0; multiplicative class only
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def everywhere_stationary(self) -> bool:
        return self.a0 and self.a0_innovation is not False


def validate(spec: ModelSpec) -> ValidationReport:
    """Check domain constraints; raise InvalidSpec or report the A0 flags."""
    mc = spec.model_class
    if spec.p < 1:
        raise InvalidSpec("coefficients", "order p must be >= 1")
    dists = list(spec.coeff_dists) + [spec.innov_dist]
    for d in dists + ([spec.intercept_dist] if spec.intercept_dist else []):
        if not np.isfinite(d.variance()):
            raise InvalidSpec(d.kind, "variance must be finite")
    if mc is ModelClass.MULTIPLICATIVE:
        if spec.intercept_dist is None:
            raise InvalidSpec("intercept", "multiplicative model needs an intercept distribution")
        for i, d in enumerate(list(spec.coeff_dists) + [spec.intercept_dist, spec.innov_dist]):
            name = f"coefficients[{i}]" if i < spec.p else ("intercept" if i == spec.p else "innovation")
            if d.signed:
                raise InvalidSpec(name, f"{d.kind} is not N0-valued")
        if abs(spec.innov_dist.mean() - 1.0) > _MEAN_ONE_TOL:
            raise InvalidSpec("innovation", f"multiplicative error must have mean 1, got {spec.innov_dist.mean()}")
    else:
        if spec.intercept_dist is not None:
            raise InvalidSpec("intercept", "only the multiplicative class takes an intercept distribution")
        if mc is ModelClass.ADDITIVE:
            for i, d in enumerate(dists):
                name = f"coefficients[{i}]" if i < spec.p else "innovation"
                if d.signed:
                    raise InvalidSpec(name, f"{d.kind} is not N0-valued; use the additive-z class")
                if d.mean() < 0:
                    raise InvalidSpec(name, "mean must be nonnegative")

    a0 = all(d.prob_zero() > 0 for d in spec.coeff_dists)
    warnings = []
    a0_innov = None
    if mc is ModelClass.MULTIPLICATIVE:
        a0_innov = spec.innov_dist.prob_zero() > 0
    if not a0 or a0_innov is False:
        warnings.append("zero-mass condition fails: stationarity needs a negative Lyapunov exponent")
    return ValidationReport(a0=a0, a0_innovation=a0_innov, warnings=tuple(warnings))


# -- simulation ---------------------------------------------------------------

def _draw_inputs(spec: ModelSpec, rng: np.random.Generator, size: int):
    """All random inputs for ``size`` steps, drawn in a fixed order."""
    coeffs = np.empty((size, spec.p), dtype=np.int64)
    for i, d in enumerate(spec.coeff_dists):
        coeffs[:, i] = d.sample(rng, size=size)
    innov = np.asarray(spec.innov_dist.sample(rng, size=size), dtype=np.int64)
    intercept = None
    if spec.model_class is ModelClass.MULTIPLICATIVE:
        intercept = np.asarray(spec.intercept_dist.sample(rng, size=size), dtype=np.int64)
    return coeffs, innov, intercept


def _step(coeffs_t, innov_t: int, intercept_t, hist: list[int], multiplicative: bool) -> int:
    """One recursion step; ``hist[0]`` is Y_{t-1}."""
    acc = 0
    for c, y in zip(coeffs_t.tolist(), hist):
        acc += c * y
    if multiplicative:
        return (1 + int(intercept_t) + acc) * int(innov_t)
    return acc + int(innov_t)


def simulate(spec: ModelSpec, n: int, burn_in: int = 500, seed: int = 0) -> Series:
    """Simulate ``burn_in + n`` steps from zero initial lags; keep the last n.

    Raises Overflow when a value would leave the signed 63-bit range.
    """
    validate(spec)
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    total = burn_in + n
    coeffs, innov, intercept = _draw_inputs(spec, rng, total)
    p = spec.p
    mult = spec.model_class is ModelClass.MULTIPLICATIVE
    hist = [0] * p
    out = np.empty(total, dtype=np.int64)
    coeff_rows = coeffs.tolist()
    innov_l = innov.tolist()
    icpt = intercept.tolist() if intercept is not None else None
    for t in range(total):
        acc = 0
        for c, y in zip(coeff_rows[t], hist):
            if c:
                acc += c * y
        if mult:
            y_t = (1 + icpt[t] + acc) * innov_l[t]
        else:
            y_t = acc + innov_l[t]
        if y_t >= _OVERFLOW or y_t <= -_OVERFLOW:
            raise Overflow(f"|Y_t| exceeds 2^62 at step {t}")
        out[t] = y_t
        hist.pop()
        hist.insert(0, y_t)
    domain = "N0" if spec.model_class is not ModelClass.ADDITIVE_Z else "Z"
    values = out[burn_in:]
    if domain == "Z" or np.any(values < 0):
        domain = "Z"
    return Series(values, domain, seed=seed, spec_digest=spec.digest())


# -- conditional moments --------------------------------------------------------

def _hist(history, p: int) -> np.ndarray:
    h = np.asarray(history, dtype=float)
    if h.shape[0] < p:
        raise ValueError(f"history must hold at least p={p} values")
    return h[:p]


def conditional_mean(theta, history, model_class) -> float:
    """E(Y_t | past) given ``history = (Y_{t-1}, ..., Y_{t-p})``."""
    theta = np.asarray(theta, dtype=float)
    h = _hist(history, len(theta) - 1)
    m = theta[0] + float(theta[1:] @ h)
    return m + 1.0 if ModelClass(model_class) is ModelClass.MULTIPLICATIVE else m


def conditional_variance(theta, lam, history, model_class) -> float:
    """V(Y_t | past); see module docstring for the parameter layout."""
    theta = np.asarray(theta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    p = len(theta) - 1
    h = _hist(history, p)
    if ModelClass(model_class) is ModelClass.MULTIPLICATIVE:
        s2_eps, delta = lam[0], lam[1:]
        lam_var = delta[0] + float(delta[1:] @ h**2)
        mu = conditional_mean(theta, h, ModelClass.MULTIPLICATIVE)
        return (s2_eps + 1) * lam_var + s2_eps * mu**2
    return lam[0] + float(lam[1:] @ h**2)


# -- companion form --------------------------------------------------------------

@dataclass(frozen=True)
class CompanionDraw:
    A: np.ndarray
    forcing: np.ndarray

    def step(self, y_prev) -> np.ndarray:
        return self.A @ np.asarray(y_prev) + self.forcing


def companion_from_inputs(coeffs_t, innov_t, intercept_t=None) -> CompanionDraw:
    coeffs_t = np.asarray(coeffs_t, dtype=np.int64)
    p = coeffs_t.shape[0]
    A = np.zeros((p, p), dtype=np.int64)
    forcing = np.zeros(p, dtype=np.int64)
    if intercept_t is None:
        A[0] = coeffs_t
        forcing[0] = innov_t
    else:
        A[0] = innov_t * coeffs_t
        forcing[0] = innov_t * (1 + intercept_t)
    if p > 1:
        A[1:, :-1] = np.eye(p - 1, dtype=np.int64)
    return CompanionDraw(A, forcing)


def draw_companion(spec: ModelSpec, rng: np.random.Generator) -> CompanionDraw:
    """One joint draw of the random companion matrix and forcing vector."""
    coeffs, innov, intercept = _draw_inputs(spec, rng, 1)
    return companion_from_inputs(coeffs[0], innov[0], None if intercept is None else intercept[0])


def draw_step(spec: ModelSpec, rng: np.random.Generator, history) -> int:
    """Scalar recursion output for one step, consuming randomness exactly as
    ``draw_companion`` does."""
    coeffs, innov, intercept = _draw_inputs(spec, rng, 1)
    return _step(coeffs[0], innov[0], None if intercept is None else intercept[0],
                 [int(v) for v in history], spec.model_class is ModelClass.MULTIPLICATIVE)


def draw_steps(spec: ModelSpec, rng: np.random.Generator, history, size: int) -> np.ndarray:
    """``size`` independent one-step draws of Y_t given the same lag vector."""
    coeffs, innov, intercept = _draw_inputs(spec, rng, size)
    hist = np.asarray([int(v) for v in history][: spec.p], dtype=np.int64)
    acc = coeffs @ hist
    if spec.model_class is ModelClass.MULTIPLICATIVE:
        return (1 + intercept + acc) * innov
    return acc + innov


def zero_product_frequency(spec: ModelSpec, reps: int, seed: int = 0) -> tuple[float, float]:
    """Monte Carlo estimate (and standard error) of P(A_t A_{t-1} ... A_{t-p+1} = 0)."""
    rng = np.random.default_rng(seed)
    p = spec.p
    prod = None
    for _ in range(p):
        coeffs, innov, intercept = _draw_inputs(spec, rng, reps)
        A = np.zeros((reps, p, p), dtype=np.int64)
        A[:, 0, :] = coeffs if intercept is None else coeffs * innov[:, None]
        if p > 1:
            A[:, 1:, :-1] = np.eye(p - 1, dtype=np.int64)
        # successive draws are older matrices: prod = A_t A_{t-1} ...
        prod = A if prod is None else np.einsum("rij,rjk->rik", prod, A)
    zero = np.all(prod.reshape(reps, -1) == 0, axis=1)
    f = float(zero.mean())
    return f, float(np.sqrt(f * (1 - f) / reps))


# -- Markov kernel (p = 1) ----------------------------------------------------------

def transition_probability(spec: ModelSpec, i: int, j: int) -> float:
    """P(Y_t = j | Y_{t-1} = i) for the N0-valued additive RMINAR(1)."""
    if spec.model_class is not ModelClass.ADDITIVE or spec.p != 1:
        raise InvalidSpec("model", "transition kernel is defined for the additive N0 class with p = 1")
    if i < 0 or j < 0:
        raise ValueError("states must be >= 0")
    eps, phi = spec.innov_dist, spec.coeff_dists[0]
    if i == 0:
        return float(eps.pmf(j))
    m = np.arange(j // i + 1)
    return float(np.sum(phi.pmf(m) * eps.pmf(j - m * i)))
