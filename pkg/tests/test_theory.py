import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from rminar import numerics
from rminar.distributions import Bernoulli, Binomial, PointMass, Poisson, Skellam, TwoPoint
from rminar.errors import DegenerateTail, NotSupported
from rminar.model import ModelSpec, simulate
from rminar.theory import (
    fourth_moment_check, generated_moments, hill_tail_estimate, lyapunov_mc, mean_companion,
    second_moment_matrix, stationarity_report, tail_index, unconditional_moments,
)


def poisson_power_moment_oracle(lam, tau, kmax=200):
    k = np.arange(1, kmax)
    return float(np.sum(k.astype(float) ** tau * stats.poisson.pmf(k, lam)))


def test_stationarity_p1_examples():
    rep = stationarity_report(ModelSpec("additive", [Poisson(0.3)], Poisson(2.0)))
    assert rep.rho_mean == pytest.approx(0.3)
    assert rep.rho_m2 == pytest.approx(0.39)
    assert rep.uncond_mean == pytest.approx(2 / 0.7)
    m = 2 / 0.7
    assert rep.uncond_variance == pytest.approx((2 + 0.3 * m * m) / (1 - 0.39), rel=1e-12)
    assert rep.uncond_variance == pytest.approx(7.2934, abs=5e-4)


def test_unit_root_has_no_mean():
    rep = stationarity_report(ModelSpec("additive", [Poisson(x) for x in (0.5, 0.2, 0.2, 0.1)], Poisson(1.0)))
    assert not rep.mean_exists and rep.uncond_mean == math.inf


def test_p2_vec_formula_matches_closed_form():
    for phi1, phi2, s1, s2, se, mu in [(0.3, 0.2, 0.3, 0.2, 2.0, 2.0), (0.1, 0.4, 0.05, 0.3, 1.5, 0.7),
                                        (0.5, 0.1, 0.0, 0.0, 1.0, 1.0)]:
        m = mu / (1 - phi1 - phi2)
        S = s1 + s2
        num = (1 - phi2) * (S * m * m + se)
        den = 1 - (phi1**2 + phi1**2 * phi2 - phi2**3 + phi2**2 + phi2 + (1 - phi2) * S)
        _, v = unconditional_moments([mu, phi1, phi2], [se, s1, s2])
        assert v == pytest.approx(num / den, rel=1e-9)


def test_weak_ar_form_matches_vec_formula():
    rng = np.random.default_rng(0)
    for _ in range(50):
        p = int(rng.integers(1, 5))
        phi = rng.dirichlet(np.ones(p + 1))[:p] * 0.9
        s2 = rng.uniform(0, 0.1, p)
        theta = np.r_[rng.uniform(0.5, 3), phi]
        lam = np.r_[rng.uniform(0.5, 3), s2]
        m1, v1 = unconditional_moments(theta, lam)
        m2, v2 = generated_moments(theta, lam, "additive")
        assert m1 == pytest.approx(m2, rel=1e-12)
        if math.isfinite(v1):
            assert v1 == pytest.approx(v2, rel=1e-9)


def test_multiplicative_report_and_matrix():
    spec = ModelSpec("multiplicative", [Poisson(0.4)], Poisson(1.0), intercept_dist=Poisson(1.0))
    rep = stationarity_report(spec)
    assert rep.uncond_mean == pytest.approx(2 / 0.6)
    assert rep.rho_m2 is None
    with pytest.raises(NotSupported):
        second_moment_matrix(spec)


def test_multiplicative_generated_variance_matches_simulation():
    # light-tailed inputs so the sample variance settles at this length
    spec = ModelSpec("multiplicative", [Bernoulli(0.3)], Binomial(2, 1.0), intercept_dist=Poisson(1.0))
    m, v = generated_moments(spec.theta(), spec.lam(), "multiplicative")
    y = simulate(spec, 400_000, seed=0).values
    assert abs(y.mean() - m) / m < 0.02
    assert abs(y.var() - v) / v < 0.08


def test_uncond_mean_matches_long_simulation():
    spec = ModelSpec("additive", [Poisson(0.4), Poisson(0.3)], Poisson(1.5))
    rep = stationarity_report(spec)
    y = simulate(spec, 200_000, seed=3).values
    assert abs(y.mean() - rep.uncond_mean) / rep.uncond_mean < 0.02


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 0.6), min_size=1, max_size=5))
def test_random_spec_properties(phis):
    phi = np.array(phis)
    rho = numerics.spectral_radius(mean_companion(phi))
    if abs(phi.sum() - 1) > 1e-9:
        assert (phi.sum() < 1) == (rho < 1)
    rho2 = numerics.spectral_radius(
        second_moment_matrix(ModelSpec("additive", [Poisson(x) for x in phi], Poisson(1.0))))
    assert rho2 >= rho**2 - 1e-12


def test_tail_index_examples():
    r = tail_index(ModelSpec("additive", [TwoPoint(0.5, 2)], Poisson(1.0)))
    assert r.tau1 == pytest.approx(1.0, abs=1e-9)
    assert tail_index(ModelSpec("additive", [Bernoulli(0.6)], Poisson(1.0))).tau1 is None


def test_tail_index_poisson_against_truncated_sum():
    r = tail_index(ModelSpec("additive", [Poisson(1.2)], Poisson(0.1)))
    assert 0 < r.tau1 < 1
    assert abs(poisson_power_moment_oracle(1.2, r.tau1) - 1) <= 1e-8
    assert abs(Poisson(1.2).power_moment(r.tau1) - 1) <= 1e-8


def test_tail_index_other_modes():
    r = tail_index(ModelSpec("additive-z", [Skellam(1.0, 0.3)], Skellam(0.5, 0.5)), mode="absolute")
    assert abs(Skellam(1.0, 0.3).power_moment(r.tau1) - 1) <= 1e-8
    spec = ModelSpec("multiplicative", [Poisson(0.9)], Poisson(1.0), intercept_dist=Poisson(1.0))
    r = tail_index(spec, mode="product_with_innovation")
    val = Poisson(1.0).power_moment(r.tau1) * Poisson(0.9).power_moment(r.tau1)
    assert abs(val - 1) <= 1e-8
    with pytest.raises(NotSupported):
        tail_index(ModelSpec("additive", [Poisson(0.3), Poisson(0.3)], Poisson(1.0)))


def test_lyapunov_examples():
    assert lyapunov_mc(ModelSpec("additive", [PointMass(2)], Poisson(1.0))).gamma == pytest.approx(math.log(2))
    assert lyapunov_mc(ModelSpec("additive", [Poisson(0.5)], Poisson(1.0))).is_minus_infinity
    spec = ModelSpec("additive", [PointMass(1), PointMass(1)], Poisson(1.0))
    rho = numerics.spectral_radius(np.array([[1.0, 1.0], [1.0, 0.0]]))
    assert lyapunov_mc(spec).gamma == pytest.approx(math.log(rho))


def test_lyapunov_mc_negative_for_stationary_spec():
    spec = ModelSpec("additive", [Poisson(0.3), Poisson(0.2)], Poisson(1.0))
    r = lyapunov_mc(spec, horizon=500, reps=20, seed=1)
    assert r.gamma < 0


def test_hill_on_pareto():
    rng = np.random.default_rng(0)
    x = (1 - rng.random(1_000_000)) ** (-1 / 1.5)
    assert abs(hill_tail_estimate(x, 0.01) - 1.5) <= 0.1
    with pytest.raises(DegenerateTail):
        hill_tail_estimate(np.full(5000, 7.0))
    with pytest.raises(ValueError):
        hill_tail_estimate(x[:100])


def test_fourth_moment_check_warns():
    with pytest.warns(UserWarning):
        out = fourth_moment_check(ModelSpec("additive", [Poisson(0.3)], Poisson(1.0)))
    assert not out["satisfied"]
    assert fourth_moment_check(ModelSpec("additive", [Bernoulli(0.3)], Poisson(1.0)))["satisfied"]
