"""Integer-valued input laws for the random coefficients and innovations.

Every law is a frozen dataclass exposing its exact mean and variance, a
pmf, a numpy-backed sampler and fractional absolute moments
``E|X|^tau``.  Means are parameterized directly (``phi``) so the laws
plug into the models as "random coefficient with mean phi".

>>> Poisson(0.3).mean(), NB2(3, 0.2).variance()
(0.3, 0.21333333333333335)
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import ClassVar

import numpy as np
from scipy import stats

from .errors import Diverges, InvalidSpec

__all__ = [
    "DistSpec",
    "Poisson",
    "Binomial",
    "NB1",
    "NB2",
    "Geometric",
    "Bernoulli",
    "Skellam",
    "PointMass",
    "TwoPoint",
    "mean",
    "variance",
    "sample",
    "power_moment",
    "dist_from_dict",
]

_DIVERGENCE_CAP = 1e12
_MAX_TERMS = 20_000_000
_BLOCK = 512


@dataclass(frozen=True)
class DistSpec:
    """Base class; subclasses set ``kind`` and implement the moments."""

    kind: ClassVar[str] = ""
    signed: ClassVar[bool] = False  # True when negative values are possible

    # -- interface -------------------------------------------------------
    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def logpmf(self, k):
        raise NotImplementedError

    def pmf(self, k):
        with np.errstate(under="ignore"):
            return np.exp(self.logpmf(k))

    def finite_support(self) -> np.ndarray | None:
        """Support points when the support is finite, else None."""
        return None

    # -- derived ---------------------------------------------------------
    def second_moment(self) -> float:
        return self.variance() + self.mean() ** 2

    def prob_zero(self) -> float:
        return float(self.pmf(0))

    @property
    def nonnegative(self) -> bool:
        return not self.signed

    def power_moment(self, tau: float, tol: float = 1e-10) -> float:
        return _power_moment(self, tau, tol)

    def to_dict(self) -> dict:
        return {"kind": self.kind, **asdict(self)}

    # Upper bound on sup_{j >= k} pmf(j+1)/pmf(j) on the positive side.
    def _ratio_bound(self, k: int) -> float:
        return float(np.exp(self.logpmf(k + 1) - self.logpmf(k)))


def _check(cond: bool, field: str, msg: str) -> None:
    if not cond:
        raise InvalidSpec(field, msg)


def _finite_nonneg(x, name: str) -> None:
    _check(isinstance(x, (int, float)) and math.isfinite(x) and x >= 0, name,
           f"must be a finite number >= 0, got {x!r}")


@dataclass(frozen=True)
class Poisson(DistSpec):
    phi: float
    kind: ClassVar[str] = "Poisson"

    def __post_init__(self):
        _finite_nonneg(self.phi, "phi")

    def mean(self):
        return float(self.phi)

    def variance(self):
        return float(self.phi)

    def sample(self, rng, size=None):
        return rng.poisson(self.phi, size=size)

    def logpmf(self, k):
        if self.phi == 0:
            return np.where(np.asarray(k) == 0, 0.0, -np.inf)
        return stats.poisson.logpmf(k, self.phi)

    def _ratio_bound(self, k):
        return self.phi / (k + 1)


@dataclass(frozen=True)
class Binomial(DistSpec):
    """Binomial(r, phi/r): r trials, mean phi."""

    r: int
    phi: float
    kind: ClassVar[str] = "Binomial"

    def __post_init__(self):
        _check(isinstance(self.r, (int, np.integer)) and self.r >= 1, "r", "must be a positive integer")
        _finite_nonneg(self.phi, "phi")
        _check(self.phi <= self.r, "phi", "must not exceed r")

    def mean(self):
        return float(self.phi)

    def variance(self):
        return float(self.phi * (1 - self.phi / self.r))

    def sample(self, rng, size=None):
        return rng.binomial(self.r, self.phi / self.r, size=size)

    def logpmf(self, k):
        return stats.binom.logpmf(k, self.r, self.phi / self.r)

    def finite_support(self):
        return np.arange(self.r + 1)


@dataclass(frozen=True)
class _NegBin(DistSpec):
    """Shared machinery: NB(size, prob) counting failures, mean phi."""

    r: float
    phi: float

    def __post_init__(self):
        _check(isinstance(self.r, (int, float)) and math.isfinite(self.r) and self.r > 0, "r", "must be > 0")
        _finite_nonneg(self.phi, "phi")

    def _size_prob(self) -> tuple[float, float]:
        raise NotImplementedError

    def mean(self):
        return float(self.phi)

    def sample(self, rng, size=None):
        if self.phi == 0:
            return np.zeros(size, dtype=np.int64) if size is not None else 0
        n, p = self._size_prob()
        return rng.negative_binomial(n, p, size=size)

    def logpmf(self, k):
        if self.phi == 0:
            return np.where(np.asarray(k) == 0, 0.0, -np.inf)
        n, p = self._size_prob()
        return stats.nbinom.logpmf(k, n, p)

    def _ratio_bound(self, k):
        n, p = self._size_prob()
        return (1 - p) * max(1.0, (k + n) / (k + 1))


@dataclass(frozen=True)
class NB1(_NegBin):
    """NB(r*phi, r/(r+1)); variance phi*(1 + 1/r)."""

    kind: ClassVar[str] = "NB1"

    def _size_prob(self):
        return self.r * self.phi, self.r / (self.r + 1)

    def variance(self):
        return float(self.phi * (1 + 1 / self.r))


@dataclass(frozen=True)
class NB2(_NegBin):
    """NB(r, r/(r+phi)); variance phi*(1 + phi/r)."""

    kind: ClassVar[str] = "NB2"

    def _size_prob(self):
        return float(self.r), self.r / (self.r + self.phi)

    def variance(self):
        return float(self.phi * (1 + self.phi / self.r))


@dataclass(frozen=True)
class Geometric(DistSpec):
    """Geometric law on {0, 1, ...} with mean phi."""

    phi: float
    kind: ClassVar[str] = "Geometric"

    def __post_init__(self):
        _finite_nonneg(self.phi, "phi")

    def mean(self):
        return float(self.phi)

    def variance(self):
        return float(self.phi * (1 + self.phi))

    def sample(self, rng, size=None):
        return rng.negative_binomial(1, 1 / (1 + self.phi), size=size)

    def logpmf(self, k):
        if self.phi == 0:
            return np.where(np.asarray(k) == 0, 0.0, -np.inf)
        return stats.nbinom.logpmf(k, 1, 1 / (1 + self.phi))

    def _ratio_bound(self, k):
        return self.phi / (1 + self.phi)


@dataclass(frozen=True)
class Bernoulli(DistSpec):
    phi: float
    kind: ClassVar[str] = "Bernoulli"

    def __post_init__(self):
        _finite_nonneg(self.phi, "phi")
        _check(self.phi <= 1, "phi", "must lie in [0, 1]")

    def mean(self):
        return float(self.phi)

    def variance(self):
        return float(self.phi * (1 - self.phi))

    def sample(self, rng, size=None):
        return rng.binomial(1, self.phi, size=size)

    def logpmf(self, k):
        return stats.bernoulli.logpmf(k, self.phi)

    def finite_support(self):
        return np.array([0, 1])


@dataclass(frozen=True)
class Skellam(DistSpec):
    """Difference N1 - N2 of independent Poisson(mu1), Poisson(mu2)."""

    mu1: float
    mu2: float
    kind: ClassVar[str] = "Skellam"
    signed: ClassVar[bool] = True

    def __post_init__(self):
        _finite_nonneg(self.mu1, "mu1")
        _finite_nonneg(self.mu2, "mu2")

    def mean(self):
        return float(self.mu1 - self.mu2)

    def variance(self):
        return float(self.mu1 + self.mu2)

    def sample(self, rng, size=None):
        return rng.poisson(self.mu1, size=size) - rng.poisson(self.mu2, size=size)

    def logpmf(self, k):
        k = np.asarray(k)
        if self.mu1 == 0 or self.mu2 == 0:
            # degenerate to a (reflected) Poisson
            lam, sign = (self.mu1, 1) if self.mu2 == 0 else (self.mu2, -1)
            if lam == 0:
                return np.where(k == 0, 0.0, -np.inf)
            return stats.poisson.logpmf(sign * k, lam)
        return stats.skellam.logpmf(k, self.mu1, self.mu2)


@dataclass(frozen=True)
class PointMass(DistSpec):
    c: int
    kind: ClassVar[str] = "PointMass"

    def __post_init__(self):
        _check(isinstance(self.c, (int, np.integer)), "c", "must be an integer")

    @property
    def signed(self):  # type: ignore[override]
        return self.c < 0

    def mean(self):
        return float(self.c)

    def variance(self):
        return 0.0

    def sample(self, rng, size=None):
        if size is None:
            return int(self.c)
        return np.full(size, self.c, dtype=np.int64)

    def logpmf(self, k):
        return np.where(np.asarray(k) == self.c, 0.0, -np.inf)

    def finite_support(self):
        return np.array([self.c])


@dataclass(frozen=True)
class TwoPoint(DistSpec):
    """P(X = 0) = p0, P(X = v) = 1 - p0."""

    p0: float
    v: int
    kind: ClassVar[str] = "TwoPoint"

    def __post_init__(self):
        _check(isinstance(self.p0, (int, float)) and 0 <= self.p0 <= 1, "p0", "must lie in [0, 1]")
        _check(isinstance(self.v, (int, np.integer)), "v", "must be an integer")

    @property
    def signed(self):  # type: ignore[override]
        return self.v < 0

    def mean(self):
        return float((1 - self.p0) * self.v)

    def variance(self):
        return float(self.p0 * (1 - self.p0) * self.v**2)

    def sample(self, rng, size=None):
        hit = rng.random(size) >= self.p0
        if size is None:
            return int(self.v) if hit else 0
        return np.where(hit, self.v, 0).astype(np.int64)

    def logpmf(self, k):
        k = np.asarray(k)
        with np.errstate(divide="ignore"):
            if self.v == 0:
                return np.where(k == 0, 0.0, -np.inf)
            return np.where(k == 0, np.log(self.p0),
                            np.where(k == self.v, np.log1p(-self.p0), -np.inf))

    def finite_support(self):
        return np.array(sorted({0, self.v}))


_KINDS = {cls.kind: cls for cls in (Poisson, Binomial, NB1, NB2, Geometric, Bernoulli,
                                     Skellam, PointMass, TwoPoint)}


def dist_from_dict(d: dict) -> DistSpec:
    """Inverse of ``DistSpec.to_dict``; unknown kinds or keys are errors."""
    if not isinstance(d, dict) or "kind" not in d:
        raise InvalidSpec("kind", "distribution entry needs a 'kind'")
    kind = d["kind"]
    if kind not in _KINDS:
        raise InvalidSpec("kind", f"unknown distribution kind {kind!r}; expected one of {sorted(_KINDS)}")
    cls = _KINDS[kind]
    names = {f.name for f in fields(cls)}
    params = {k: v for k, v in d.items() if k != "kind"}
    unknown = set(params) - names
    if unknown:
        raise InvalidSpec(kind, f"unknown parameter(s) {sorted(unknown)}")
    missing = names - set(params)
    if missing:
        raise InvalidSpec(kind, f"missing parameter(s) {sorted(missing)}")
    try:
        return cls(**params)
    except TypeError as exc:
        raise InvalidSpec(kind, str(exc)) from exc


# -- module-level operation surface -----------------------------------------

def mean(spec: DistSpec) -> float:
    return spec.mean()


def variance(spec: DistSpec) -> float:
    return spec.variance()


def sample(spec: DistSpec, rng: np.random.Generator, size=None):
    return spec.sample(rng, size)


def power_moment(spec: DistSpec, tau: float, tol: float = 1e-10) -> float:
    """``E|X|^tau`` with the convention ``0**tau = 0`` (also at tau = 0).

    Infinite supports are summed until a geometric bound on the remaining
    tail falls below ``tol`` times the accumulated sum.  Raises Diverges
    once partial sums exceed 1e12.
    """
    return spec.power_moment(tau, tol)


def _power_moment(spec: DistSpec, tau: float, tol: float) -> float:
    if tau < 0:
        raise ValueError("tau must be >= 0")
    support = spec.finite_support()
    if support is not None:
        nz = support[support != 0]
        return float(np.sum(np.abs(nz).astype(float) ** tau * spec.pmf(nz)))
    total = _one_sided(lambda k: spec.logpmf(k), spec._ratio_bound, spec.mean(), tau, tol)
    if spec.signed:
        neg_mean = max(-spec.mean(), 0.0)
        if isinstance(spec, Skellam):
            mirrored = Skellam(spec.mu2, spec.mu1)
            total += _one_sided(lambda k: mirrored.logpmf(k), mirrored._ratio_bound, neg_mean, tau, tol)
        else:  # pragma: no cover - all signed infinite-support kinds are Skellam
            raise NotImplementedError(spec.kind)
    return float(total)


def _one_sided(logpmf, ratio_bound, centre: float, tau: float, tol: float) -> float:
    """Sum_{k >= 1} k^tau pmf(k) with a geometric tail stop."""
    acc = 0.0
    start = 1
    while start < _MAX_TERMS:
        ks = np.arange(start, start + _BLOCK, dtype=float)
        with np.errstate(under="ignore", divide="ignore"):
            terms = np.exp(tau * np.log(ks) + logpmf(ks))
        acc += float(np.sum(terms))
        if acc > _DIVERGENCE_CAP:
            raise Diverges(f"partial sums of E|X|^{tau} exceed {_DIVERGENCE_CAP:g}")
        k = int(ks[-1])
        last = float(terms[-1])
        if k > centre:
            if last == 0.0:
                return acc
            r = ratio_bound(k) * ((k + 1) / k) ** tau
            if r < 1 and last * r / (1 - r) <= tol * acc:
                return acc
        start += _BLOCK
    raise Diverges(f"E|X|^{tau} not resolved within {_MAX_TERMS} terms")
