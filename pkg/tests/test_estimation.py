import math

import numpy as np
import pytest

from rminar.distributions import NB2, Poisson, Skellam
from rminar.errors import InvalidSpec, NotSupported, SingularMatrix, TooShort
from rminar.estimation import (
    FitConfig, asymptotic_covariance_additive, build_regressors, dispersion_test, fit,
    multiplicative_triplet, multiplicative_variance_gradient, nb2_shape_estimates, two_stage_ls,
    wls_lambda_stage, wls_theta_stage,
)
from rminar.model import ModelSpec, simulate

TABLE_A = ModelSpec("additive", [Poisson(x) for x in (0.3, 0.2, 0.1, 0.1)], Poisson(2.0))


def test_build_regressors_example():
    reg = build_regressors([2, 3, 1, 4], 1)
    assert reg.Ycal.tolist() == [[1, 2], [1, 3], [1, 1]]
    assert reg.Zcal.tolist() == [[1, 4], [1, 9], [1, 1]]
    assert reg.y.tolist() == [3, 1, 4]
    assert build_regressors([2, 3, 1, 4], 3).n == 1
    with pytest.raises(TooShort):
        build_regressors([2, 3, 1], 3)
    reg = build_regressors(simulate(TABLE_A, 200, seed=1), 4)
    assert np.array_equal(reg.Ycal * reg.Ycal, reg.Zcal)


def test_wls_theta_examples():
    reg = build_regressors([2, 3, 1, 4], 1)
    th = wls_theta_stage(reg, reg.y, np.ones(3))
    assert th == pytest.approx([17 / 3, -1.5], abs=1e-12)
    assert np.array_equal(wls_theta_stage(reg, reg.y, np.full(3, 5.0)), th)
    rng = np.random.default_rng(0)
    reg = build_regressors(rng.poisson(3, 60), 2)
    truth = np.array([0.7, -0.2, 0.4])
    assert wls_theta_stage(reg, reg.Ycal @ truth, rng.uniform(1, 9, reg.n)) == pytest.approx(truth, abs=1e-10)


def test_wls_lambda_exact_and_constrained():
    rng = np.random.default_rng(1)
    reg = build_regressors(rng.poisson(3, 80), 2)
    lam0 = np.array([1.5, 0.2, 0.0])
    resid = np.sqrt(reg.Zcal @ lam0)
    lam = wls_lambda_stage(reg, resid, rng.uniform(1, 4, reg.n))
    assert lam == pytest.approx(lam0, abs=1e-9)
    # target decreasing in the first lag pushes that coordinate negative
    target = np.maximum(10 - reg.Zcal[:, 1] * 0.3, 0) + reg.Zcal[:, 2] * 0.1
    lam, active = wls_lambda_stage(reg, np.sqrt(target), np.ones(reg.n), return_active=True)
    assert lam[1] == 0 and active[1]
    unconstrained = np.linalg.lstsq(reg.Zcal, target, rcond=None)[0]
    assert unconstrained[1] < 0


def test_lambda_star_scaling_invariance():
    s = simulate(TABLE_A, 600, seed=4)
    base = fit(s, FitConfig(p=4))
    lam_star = np.array([1.0, 2.0, 0.5, 0.3, 4.0])
    a = fit(s, FitConfig(p=4, lambda_star=lam_star))
    b = fit(s, FitConfig(p=4, lambda_star=5 * lam_star))
    for name in ("theta1", "lambda1", "theta2", "lambda2"):
        assert np.max(np.abs(getattr(a, name) - getattr(b, name))) <= 1e-10
    assert base.converged or base.cascade_iterations == 10
    assert fit(s, FitConfig(p=4, cascade_max_iters=100)).converged


def test_constant_series_is_singular():
    with pytest.raises(SingularMatrix):
        fit(np.full(50, 3), FitConfig(p=1))
    with pytest.raises(SingularMatrix):
        two_stage_ls(np.full(50, 3), 1)


def test_two_stage_matches_dense_oracle():
    rng = np.random.default_rng(2)
    for _ in range(20):
        y = rng.poisson(4, int(rng.integers(20, 40)))
        theta, lam = two_stage_ls(y, 2)
        reg = build_regressors(y, 2)
        X = reg.Ycal
        oracle = np.linalg.solve(X.T @ X, X.T @ reg.y)
        assert theta == pytest.approx(oracle, abs=1e-9)
        assert np.all(lam >= 0)
        assert theta == pytest.approx(wls_theta_stage(reg, reg.y, np.full(reg.n, 3.3)), abs=1e-12)


def test_noise_free_data_gives_zero_variance():
    y = [1000.0]
    for _ in range(40):
        y.append(1 + 0.5 * y[-1])
    r = fit(np.array(y), FitConfig(p=1))
    assert r.theta2 == pytest.approx([1, 0.5], abs=1e-8)
    assert np.max(np.abs(r.lambda1)) <= 1e-8


def test_table_a_single_fit_reasonable():
    r = fit(simulate(TABLE_A, 1000, seed=7), FitConfig(p=4))
    assert abs(r.theta2[0] - 2) < 0.6 and np.all(np.abs(r.theta2[1:] - [0.3, 0.2, 0.1, 0.1]) < 0.2)
    assert np.all(r.lambda1 >= 0) and np.all(r.lambda2 >= 0)
    assert np.all(r.ase_theta >= 0) and np.all(r.ase_lambda >= 0)
    assert np.max(np.abs(r.Sigma_hat - r.Sigma_hat.T)) <= 1e-12
    assert np.max(np.abs(r.Omega_hat - r.Omega_hat.T)) <= 1e-12
    assert r.cascade_iterations <= 10


def test_sigma_collapse_against_independent_A():
    r = fit(simulate(TABLE_A, 800, seed=8), FitConfig(p=4))
    reg = build_regressors(simulate(TABLE_A, 800, seed=8), 4)
    v = reg.Zcal @ r.lambda2
    A = sum(np.outer(x, x) / vt for x, vt in zip(reg.Ycal, v)) / reg.n
    assert r.Sigma_hat == pytest.approx(np.linalg.inv(A), rel=1e-9)
    S, O, at, al = asymptotic_covariance_additive(reg, r.theta2, r.lambda2, r.e)
    assert np.array_equal(S, r.Sigma_hat) and np.array_equal(al, r.ase_lambda)


def test_martingale_residuals():
    r = fit(simulate(TABLE_A, 5000, seed=9), FitConfig(p=4))
    for x in (r.e, r.u):
        assert abs(x.mean()) <= 4 * x.std() / math.sqrt(x.size)


def test_z_valued_path():
    spec = ModelSpec("additive-z", [Skellam(0.25, 0.05), Skellam(0.1, 0.3)], Skellam(0.7, 0.3))
    r = fit(simulate(spec, 4000, seed=3), FitConfig(model_class="additive-z", p=2))
    assert r.theta2 == pytest.approx(spec.theta(), abs=0.15)
    with pytest.raises(InvalidSpec):
        fit(simulate(spec, 200, seed=3), FitConfig(model_class="additive", p=2))


def test_links_skip_variance_stage():
    s = simulate(TABLE_A, 1000, seed=10)
    r = fit(s, FitConfig(p=4, variance_link="poisson"))
    assert np.array_equal(r.lambda2, np.maximum(r.theta2, 0))
    g = fit(s, FitConfig(p=4, variance_link="geometric"))
    assert g.lambda2 == pytest.approx(g.theta2 * (1 + g.theta2))
    with pytest.raises(InvalidSpec):
        FitConfig(p=4, variance_link="proportional")
    with pytest.raises(InvalidSpec):
        FitConfig(p=1, lambda_star=[1.0, 0.0])


def test_multiplicative_gradient_matches_finite_differences():
    spec = ModelSpec("multiplicative", [Poisson(0.3), Poisson(0.2)], Poisson(1.0), intercept_dist=Poisson(1.0))
    reg = build_regressors(simulate(spec, 300, seed=1), 2)
    theta = np.array([1.0, 0.3, 0.2])
    lam = np.array([0.8, 1.1, 0.3, 0.25])
    g = multiplicative_variance_gradient(reg, theta, lam)
    from rminar.estimation import _mult_variance
    for j in range(lam.size):
        h = 1e-6 * max(1.0, lam[j])
        up, dn = lam.copy(), lam.copy()
        up[j] += h
        dn[j] -= h
        fd = (_mult_variance(reg, theta, up) - _mult_variance(reg, theta, dn)) / (2 * h)
        assert np.max(np.abs(fd - g[:, j]) / np.maximum(np.abs(g[:, j]), 1e-12)) <= 1e-6


def test_multiplicative_free_fit():
    spec = ModelSpec("multiplicative", [Poisson(0.3)], Poisson(1.0), intercept_dist=Poisson(1.0))
    r = fit(simulate(spec, 5000, seed=2), FitConfig(model_class="multiplicative", p=1))
    assert r.inner_opt["successes"] >= 1
    assert np.all(r.lambda2 >= 0)
    assert r.theta2 == pytest.approx([1.0, 0.3], abs=0.25)
    assert np.max(np.abs(r.Omega_hat - r.Omega_hat.T)) <= 1e-12


def test_triplet_sigma_and_arithmetic():
    # single summand Y=3, mu=2, delta2=1: ((3-2)^2 - 1) / (1 + 4) = 0
    assert ((3 - 2) ** 2 - 1) / (1 + 2**2) == 0
    spec = ModelSpec("multiplicative", [Poisson(0.3)], Poisson(1.0), intercept_dist=Poisson(1.0))
    s = simulate(spec, 5000, seed=6)
    cfg = FitConfig(model_class="multiplicative", p=1, variance_link="poisson")
    r = multiplicative_triplet(s, cfg)
    assert abs(r.sigma_eps2 - 1.0) <= 0.2
    reg = build_regressors(s, 1)
    mu = 1 + reg.Ycal @ r.theta1
    d2 = reg.Zcal @ np.maximum(r.theta1, 0)
    assert r.sigma_eps2 == pytest.approx(np.mean(((reg.y - mu) ** 2 - d2) / (d2 + mu**2)), rel=1e-12)
    assert r.lambda2[1:] == pytest.approx(np.maximum(r.theta2, 0))
    assert r.inner_opt["starts"] == 0


def test_nb2_shape():
    assert nb2_shape_estimates([1.0, 0.2], [1.0, 0.2133])[1] == pytest.approx(3.0, rel=0.01)
    assert nb2_shape_estimates([1.0, 0.2], [1.0, 0.2]) == [None, None]
    assert nb2_shape_estimates([0.5], [0.75]) == [pytest.approx(1.0)]


def test_dispersion_test_zero_and_shape():
    S = np.eye(2)
    assert np.all(dispersion_test([1.0, 0.3], [1.0, 0.3], S, S, "poisson", 100) == 0)
    with pytest.raises(NotSupported):
        dispersion_test([1.0, 0.3], [1.0, 1.0, 0.3], S, np.eye(3), "poisson", 100)


def _z(spec, seed):
    r = fit(simulate(spec, 5000, seed=seed), FitConfig(p=spec.p))
    return dispersion_test(r.theta2, r.lambda2, r.Sigma_hat, r.Omega_hat, "poisson", r.n_eff)


def test_dispersion_size_and_power():
    null = ModelSpec("additive", [Poisson(0.3)], Poisson(2.0))
    zs = np.array([_z(null, s) for s in range(60)])
    assert np.mean(np.abs(zs) <= 1.96) >= 0.90
    alt = ModelSpec("additive", [Poisson(0.3)], NB2(1.0, 2.0))
    za = np.array([_z(alt, s)[0] for s in range(60)])
    assert np.mean(np.abs(za) > 1.96) >= 0.80


def _mae(spec, n, reps):
    out = []
    for r in range(reps):
        res = fit(simulate(spec, n, seed=1000 * n + r), FitConfig(p=spec.p))
        out.append(np.abs(res.theta2 - spec.theta()).mean())
    return np.mean(out)


@pytest.mark.slow
@pytest.mark.parametrize("phis", [(0.3, 0.2, 0.1, 0.1), (0.5, 0.2, 0.3, 0.2)])
def test_consistency_mae_decreases(phis):
    spec = ModelSpec("additive", [Poisson(x) for x in phis], Poisson(2.0 if sum(phis) < 1 else 0.1))
    errs = [_mae(spec, n, 100) for n in (500, 2000, 8000)]
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.slow
def test_efficiency_ordering():
    t1, t2 = [], []
    for r in range(300):
        res = fit(simulate(TABLE_A, 1000, seed=50_000 + r), FitConfig(p=4))
        t1.append(res.theta1)
        t2.append(res.theta2)
    assert np.all(np.var(t2, axis=0) <= 1.1 * np.var(t1, axis=0))
