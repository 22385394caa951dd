"""Replicated simulate-and-fit experiments summarized as Mean / StD / ASE tables."""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidSpec, RminarError
from .estimation import FitConfig, fit
from .model import ModelSpec, simulate

__all__ = ["StudyConfig", "StudyResult", "replication_seed", "run_study"]


@dataclass
class StudyConfig:
    spec: ModelSpec
    n: int
    reps: int
    master_seed: int
    fit: FitConfig
    workers: int = 1
    burn_in: int = 500

    def __post_init__(self):
        if self.reps < 1:
            raise InvalidSpec("reps", "must be >= 1")
        if self.n <= 10 * (self.spec.p + 1):
            raise InvalidSpec("n", f"must exceed 10(p+1) = {10 * (self.spec.p + 1)}")
        if self.workers < 1:
            raise InvalidSpec("workers", "must be >= 1")
        if self.fit.p != self.spec.p or self.fit.model_class is not self.spec.model_class:
            raise InvalidSpec("fit", "fit class and order must match the model")


class _Welford:
    def __init__(self, k: int):
        self.count = 0
        self.mean = np.zeros(k)
        self.m2 = np.zeros(k)

    def push(self, x):
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self.m2 += d * (x - self.mean)

    def std(self):
        # population StD over replications, as in simulation tables
        if self.count == 0:
            return np.full_like(self.mean, math.nan)
        return np.sqrt(self.m2 / self.count)


@dataclass
class StudyResult:
    names: list[str]
    true_values: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    ase: np.ndarray
    successes: int
    failures: int
    failure_messages: list[str] = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        def num(x):
            x = float(x)
            if math.isnan(x):
                return "none"
            if math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return x

        return {
            "parameters": [
                {"name": nm, "true": num(t), "mean": num(m), "std": num(s), "ase": num(a)}
                for nm, t, m, s, a in zip(self.names, self.true_values, self.mean, self.std, self.ase)
            ],
            "successes": self.successes,
            "failures": self.failures,
            "failure_messages": self.failure_messages,
            "wall_time": self.wall_time,
        }

    def table(self) -> str:
        lines = [f"{'param':<14}{'true':>10}{'Mean':>10}{'StD':>10}{'ASE':>10}"]
        for nm, t, m, s, a in zip(self.names, self.true_values, self.mean, self.std, self.ase):
            lines.append(f"{nm:<14}{t:>10.4f}{m:>10.4f}{s:>10.4f}{a:>10.4f}")
        lines.append(f"replications: {self.successes} ok, {self.failures} failed")
        return "\n".join(lines)


def replication_seed(master_seed: int, r: int) -> np.random.SeedSequence:
    """Seed for replication r; depends only on (master_seed, r)."""
    return np.random.SeedSequence(master_seed, spawn_key=(r,))


def parameter_names(spec: ModelSpec) -> list[str]:
    phis = [f"phi{i}" for i in range(1, spec.p + 1)]
    if spec.model_class.is_additive:
        return ["mu_eps", *phis, "s2_eps", *[f"s2_{x}" for x in phis]]
    return ["omega", *phis, "s2_eps", "s2_omega", *[f"s2_{x}" for x in phis]]


def _one(args):
    cfg, r = args
    try:
        s = simulate(cfg.spec, cfg.n, burn_in=cfg.burn_in, seed=replication_seed(cfg.master_seed, r))
        res = fit(s, cfg.fit)
    except RminarError as exc:
        return r, None, f"rep {r}: {type(exc).__name__}: {exc}"
    est = np.concatenate([res.theta2, res.lambda2])
    ase = np.concatenate([res.ase_theta, res.ase_lambda])
    return r, (est, ase), None


def run_study(cfg: StudyConfig) -> StudyResult:
    """Run the replications and aggregate them in replication order.

    Workers only compute; aggregation happens in the parent in order r = 0..reps-1,
    so the floating-point result is identical for any worker count.
    """
    t0 = time.perf_counter()
    names = parameter_names(cfg.spec)
    k = len(names)
    est_acc, ase_acc = _Welford(k), _Welford(k)
    failures: list[str] = []
    jobs = [(cfg, r) for r in range(cfg.reps)]
    if cfg.workers == 1:
        results = map(_one, jobs)
        _aggregate(results, est_acc, ase_acc, failures)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            # map preserves submission order
            _aggregate(pool.map(_one, jobs, chunksize=max(1, cfg.reps // (4 * cfg.workers))),
                       est_acc, ase_acc, failures)
    truth = np.concatenate([cfg.spec.theta(), cfg.spec.lam()])
    return StudyResult(
        names=names, true_values=truth,
        mean=est_acc.mean if est_acc.count else np.full(k, math.nan),
        std=est_acc.std(),
        ase=ase_acc.mean if ase_acc.count else np.full(k, math.nan),
        successes=est_acc.count, failures=len(failures), failure_messages=failures,
        wall_time=time.perf_counter() - t0,
    )


def _aggregate(results, est_acc, ase_acc, failures):
    for _, out, msg in results:
        if out is None:
            failures.append(msg)
            continue
        est_acc.push(out[0])
        ase_acc.push(out[1])
