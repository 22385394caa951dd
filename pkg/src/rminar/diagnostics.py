"""Sample autocorrelations, residual checks and forecast evaluation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonpositiveVariance, NumericalBreakdown, RminarError, ZeroVariance
from .estimation import FitConfig, FitResult, build_regressors, fit
from .model import Series
from .theory import generated_moments

__all__ = [
    "DiagnosticsReport",
    "ForecastEvalResult",
    "acf",
    "pacf",
    "pearson_residuals",
    "in_sample_metrics",
    "diagnose",
    "order_selection_report",
    "rolling_forecast_eval",
]


def _values(series) -> np.ndarray:
    return np.asarray(series.values if isinstance(series, Series) else series, dtype=float)


def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 0..max_lag with the 1/n autocovariance."""
    y = _values(series)
    n = y.shape[0]
    if n <= max_lag:
        raise ValueError("series must be longer than max_lag")
    d = y - y.mean()
    c0 = float(d @ d) / n
    if c0 == 0.0:
        raise ZeroVariance("constant series has no autocorrelation")
    return np.array([float(d[: n - k] @ d[k:]) / n / c0 for k in range(max_lag + 1)])


def pacf(series, max_lag: int) -> np.ndarray:
    """Partial autocorrelations at lags 1..max_lag (Durbin-Levinson on the sample ACF).

    Entry k-1 of the returned array is the lag-k value.
    """
    r = acf(series, max_lag)
    out = np.empty(max_lag)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        a = (r[k] - float(phi @ r[k - 1 : 0 : -1])) / v
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1 - a * a
        out[k - 1] = a
        if v <= 0 and k < max_lag:
            raise NumericalBreakdown(f"prediction variance not positive at lag {k}")
    return out


def pearson_residuals(series, result: FitResult) -> np.ndarray:
    """(Y_t - mu_t) / sqrt(V_t) from the stage-2 estimates, t = p+1..n."""
    reg = build_regressors(series, result.p)
    mu = result.cond_mean(reg)
    v = result.cond_variance(reg)
    bad = np.flatnonzero(~(v > 0))
    if bad.size:
        i = int(bad[0])
        raise NonpositiveVariance(i + result.p, float(v[i]))
    return (reg.y - mu) / np.sqrt(v)


@dataclass
class DiagnosticsReport:
    acf: np.ndarray
    pacf: np.ndarray
    conf_band: float
    pearson_residuals: np.ndarray | None = None
    mar: float | None = None
    msr: float | None = None
    mspr: float | None = None
    generated_mean: float | None = None
    generated_variance: float | None = None

    def to_dict(self) -> dict:
        d = {
            "acf": [float(x) for x in self.acf],
            "pacf": [float(x) for x in self.pacf],
            "conf_band": self.conf_band,
        }
        for key in ("mar", "msr", "mspr", "generated_mean", "generated_variance"):
            d[key] = getattr(self, key)
        return d


def in_sample_metrics(series, result: FitResult) -> dict:
    """MAR, MSR, MSPR and the unconditional moments implied by the fit."""
    reg = build_regressors(series, result.p)
    r = reg.y - result.cond_mean(reg)
    pr = pearson_residuals(series, result)
    mar = float(np.mean(np.abs(r)))
    msr = float(np.mean(r * r))
    # Jensen: mean(r^2) >= mean(|r|)^2
    assert msr >= mar * mar * (1 - 1e-12)
    m, v = generated_moments(result.theta2, result.lambda2, result.model_class)
    return {
        "mar": mar,
        "msr": msr,
        "mspr": float(np.mean(pr * pr)),
        "generated_mean": m,
        "generated_variance": v,
    }


def diagnose(series, max_lag: int = 20, result: FitResult | None = None) -> DiagnosticsReport:
    n = len(_values(series))
    rep = DiagnosticsReport(acf(series, max_lag), pacf(series, max_lag), 1.96 / math.sqrt(n))
    if result is not None:
        rep.pearson_residuals = pearson_residuals(series, result)
        for k, v in in_sample_metrics(series, result).items():
            setattr(rep, k, v)
    return rep


def order_selection_report(series, p_max: int, cfg: FitConfig) -> list[dict]:
    """One fit per order 1..p_max; a failing order gets an ``error`` row."""
    n = len(_values(series))
    if p_max < 1 or p_max >= n / 10:
        raise ValueError("p_max must satisfy 1 <= p_max < n/10")
    rows = []
    for p in range(1, p_max + 1):
        c = FitConfig(
            model_class=cfg.model_class, p=p, variance_link=cfg.variance_link, c=cfg.c,
            cascade_tol=cfg.cascade_tol, cascade_max_iters=cfg.cascade_max_iters,
        )
        try:
            res = fit(series, c)
            row = {"p": p, **in_sample_metrics(series, res)}
        except RminarError as exc:
            row = {"p": p, "error": f"{type(exc).__name__}: {exc}"}
        rows.append(row)
    return rows


@dataclass
class ForecastEvalResult:
    rows: list[dict] = field(default_factory=list)  # one per training size n_c

    def to_dict(self) -> dict:
        return {"rows": self.rows}


def rolling_forecast_eval(series, cfg: FitConfig, train_sizes) -> ForecastEvalResult:
    """Fit on the first n_c values, then score one-step forecasts for t = n_c+1..n.

    The forecasts use the realized lags and the parameters from that single fit.
    """
    y = _values(series)
    n = y.shape[0]
    p = cfg.p
    out = ForecastEvalResult()
    for n_c in train_sizes:
        n_c = int(n_c)
        if not 10 * p < n_c < n:
            raise ValueError(f"training size {n_c} must lie in ({10 * p}, {n})")
        res = fit(y[:n_c], cfg)
        reg = build_regressors(y[n_c - p :], p)
        mu = res.cond_mean(reg)
        v = res.cond_variance(reg)
        bad = np.flatnonzero(~(v > 0))
        if bad.size:
            raise NonpositiveVariance(int(bad[0]) + n_c, float(v[bad[0]]))
        err = reg.y - mu
        out.rows.append({
            "n_c": n_c,
            "forecasts": int(err.shape[0]),
            "msfe": float(np.mean(err * err)),
            "mafe": float(np.mean(np.abs(err))),
            "mspfe": float(np.mean(err * err / v)),
        })
    return out
