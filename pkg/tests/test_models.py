import numpy as np
import pytest
from scipy import stats

from oracles import batch_means_se, logistic_2d_moments
from ups.errors import ConfigError, ConvergenceError
from ups.models import (
    LinearModel,
    LogisticModel,
    PggKernel,
    RwmhConfig,
    laplace_fit,
    laplace_rwmh_config,
    linreg_gibbs_kernel,
    load_leukemia,
    load_mammals,
    load_stackloss,
    pgg_kernel,
    rwmh_kernel,
    synthetic_logistic,
)
from ups.paths import doublewell_path, normal_translation_path
from ups.tuning import choose_k
from ups.unbiased import EstimatorConfig, h_km, meeting_time, run_coupled


# ---------------------------------------------------------------- data

def test_dataset_shapes():
    leuk = load_leukemia()
    assert leuk.design.shape == (33, 2) and set(np.unique(leuk.y)) == {0.0, 1.0}
    mam = load_mammals()
    assert mam.design.shape == (62, 2) and np.all(mam.design[:, 0] == 1.0)
    stack = load_stackloss()
    assert stack.design.shape == (21, 4)
    syn = synthetic_logistic(seed=1)
    assert syn.design.shape == (1000, 7)
    assert np.array_equal(syn.design, synthetic_logistic(seed=1).design)
    assert np.allclose(syn.prior_cov, 10 * np.eye(7))


def test_model_validation():
    with pytest.raises(ConfigError):
        LogisticModel(np.ones((3, 2)), [0, 1, 2], np.zeros(2), np.eye(2))
    with pytest.raises(ConfigError):
        LogisticModel(np.ones((3, 2)), [0, 1, 1], np.zeros(2), -np.eye(2))
    with pytest.raises(ConfigError):
        LinearModel(np.ones((3, 2)), np.zeros(3))  # rank deficient
    with pytest.raises(ConfigError):
        LinearModel(np.eye(2), np.zeros(2))  # n == p


# ---------------------------------------------------------------- RWMH

def test_rwmh_invariance_standard_normal():
    pair = rwmh_kernel(normal_translation_path(4.0), 0.0, RwmhConfig.isotropic(1.0, [0.0], 1.0))
    rng = np.random.default_rng(0)
    _, xs, _ = pair.trajectories(10_000, 100_000, rng)
    chain = xs[1000:, 0]
    thinned = chain[::20]
    assert stats.kstest(thinned, "norm").pvalue > 1e-3
    se = batch_means_se(chain)
    assert abs(chain.mean()) < 4 * se
    assert abs((chain**2).mean() - 1.0) < 4 * batch_means_se(chain**2)


@pytest.mark.parametrize("reflect", [False, True])
def test_rwmh_faithful_from_equal_states(reflect):
    pair = rwmh_kernel(doublewell_path(), 0.5, RwmhConfig.isotropic(np.sqrt(2), [-2.0, -2.0], 1.0, reflect))
    rng = np.random.default_rng(1)
    x = np.array([0.3, -1.0])
    for _ in range(200):
        x, y, met = pair.coupled_step(x, x.copy(), rng)
        assert met and np.array_equal(x, y)


@pytest.mark.parametrize("reflect", [False, True])
def test_rwmh_coupled_marginals(reflect):
    pair = rwmh_kernel(doublewell_path(), 0.5, RwmhConfig.isotropic(np.sqrt(2), [-2.0, -2.0], 1.0, reflect))
    rng = np.random.default_rng(2)
    x0, y0 = np.array([-2.0, 0.5]), np.array([1.0, 1.0])
    coupled = [pair.coupled_step(x0, y0, rng) for _ in range(10_000)]
    single_x = np.array([pair.single_step(x0, rng) for _ in range(10_000)])
    single_y = np.array([pair.single_step(y0, rng) for _ in range(10_000)])
    cx = np.array([c[0] for c in coupled])
    cy = np.array([c[1] for c in coupled])
    for j in range(2):
        assert stats.ks_2samp(cx[:, j], single_x[:, j]).pvalue > 1e-3
        assert stats.ks_2samp(cy[:, j], single_y[:, j]).pvalue > 1e-3


def test_doublewell_chain_switches_modes():
    pair = rwmh_kernel(doublewell_path(), 1.0, RwmhConfig.isotropic(np.sqrt(2), [-2.0, -2.0], 1.0))
    _, xs, _ = pair.trajectories(100_000, 200_000, np.random.default_rng(3))
    signs = np.sign(xs[:, 0])
    assert np.any(signs > 0) and np.any(signs < 0)


def test_rwmh_config_validation():
    with pytest.raises(ConfigError):
        RwmhConfig(np.zeros((1, 1)), [0.0], np.eye(1))
    with pytest.raises(ConfigError):
        RwmhConfig(np.eye(2), [0.0], np.eye(2))


# ---------------------------------------------------------------- PGG

def test_pgg_lambda_zero_is_prior():
    m = load_leukemia()
    kern = pgg_kernel(m, 0.0)
    rng = np.random.default_rng(4)
    draws = np.array([kern.single_step(np.array([0.1, -0.3]), rng) for _ in range(5000)])
    for j in range(2):
        assert stats.kstest(draws[:, j], "norm", args=(0.0, np.sqrt(10.0))).pvalue > 1e-3


@pytest.mark.parametrize("lam", [0.0, 0.4, 1.0])
def test_pgg_conditional_algebra(lam):
    m = synthetic_logistic(seed=2, n=200)
    kern = pgg_kernel(m, lam)
    rng = np.random.default_rng(5)
    dl = lam * m.design
    expected = dl.T @ (m.y - 0.5) + np.linalg.solve(m.prior_cov, m.prior_mean)
    for seed in range(5):
        mean, chol = kern.conditional(rng.normal(0, 0.5, m.p), seed)
        lhs = chol @ (chol.T @ mean)
        assert np.allclose(lhs, expected, rtol=1e-10, atol=1e-10)


def test_pgg_coupled_marginals():
    m = load_leukemia()
    kern = pgg_kernel(m, 0.7)
    rng = np.random.default_rng(6)
    x0, y0 = np.array([-0.01, 1.0]), np.array([0.00, 2.5])
    coupled = [kern.coupled_step(x0, y0, rng) for _ in range(5000)]
    sx = np.array([kern.single_step(x0, rng) for _ in range(5000)])
    sy = np.array([kern.single_step(y0, rng) for _ in range(5000)])
    proj = np.array([1e3, 1.0])  # put the wbc coefficient on the scale of the ag one
    assert stats.ks_2samp(np.array([c[0] for c in coupled]) @ proj, sx @ proj).pvalue > 1e-3
    assert stats.ks_2samp(np.array([c[1] for c in coupled]) @ proj, sy @ proj).pvalue > 1e-3


def test_pgg_faithful_and_crn():
    m = load_leukemia()
    kern = pgg_kernel(m, 1.0)
    rng = np.random.default_rng(7)
    x = np.array([0.0, 1.0])
    for _ in range(100):
        x, y, met = kern.coupled_step(x, x.copy(), rng)
        assert met and np.array_equal(x, y)


def test_pgg_posterior_mean_matches_quadrature():
    m = load_leukemia()
    fit = laplace_fit(m)
    mean_oracle, _ = logistic_2d_moments(m, *fit)
    kern = pgg_kernel(m, 1.0)
    # long single chain
    _, xs, _ = kern.trajectories(40_000, 100_000, np.random.default_rng(8))
    chain = xs[1000:]
    assert np.all(np.abs(chain.mean(axis=0) - mean_oracle) < 4 * batch_means_se(chain))
    # averaged unbiased estimators
    cfg = EstimatorConfig(10, 50)
    rng = np.random.default_rng(9)
    vals = np.array([h_km(run_coupled(kern, lambda b: b, cfg, rng), cfg) for _ in range(2000)])
    se = vals.std(axis=0, ddof=1) / np.sqrt(len(vals))
    assert np.all(np.abs(vals.mean(axis=0) - mean_oracle) < 4 * se)


def test_pgg_synthetic_meeting_times_finite():
    m = synthetic_logistic(seed=1)
    kern = pgg_kernel(m, 1.0)
    rng = np.random.default_rng(10)
    taus = [meeting_time(kern, rng) for _ in range(1000)]
    k = choose_k(taus)
    assert 1 <= k < 1000


def test_pgg_rejects_tempering_path():
    m = load_leukemia()
    with pytest.raises(ConfigError):
        PggKernel(m.cv_tempering_path([0]), 0.5)


# ---------------------------------------------------------------- Laplace

def test_laplace_fit_gradient_and_curvature():
    m = synthetic_logistic(seed=1)
    beta, cov = laplace_fit(m)
    prob = 1 / (1 + np.exp(-m.design @ beta))
    assert np.linalg.norm(m.design.T @ (m.y - prob)) < 1e-8
    info = (m.design.T * (prob * (1 - prob))) @ m.design
    assert np.allclose(cov @ info, np.eye(m.p), atol=1e-8)
    np.linalg.cholesky(cov)


def test_laplace_fit_symmetric_data():
    d = np.array([[1.0], [1.0], [-1.0], [-1.0]])
    y = np.array([1.0, 0.0, 1.0, 0.0])
    beta, _ = laplace_fit(LogisticModel.with_isotropic_prior(d, y))
    assert abs(beta[0]) < 1e-12
    # one covariate, intercept only: MLE is the logit of the success rate
    d1 = np.ones((10, 1))
    y1 = np.array([1.0] * 7 + [0.0] * 3)
    beta1, var1 = laplace_fit(LogisticModel.with_isotropic_prior(d1, y1))
    assert beta1[0] == pytest.approx(np.log(0.7 / 0.3), rel=1e-10)
    assert var1[0, 0] == pytest.approx(1 / (10 * 0.7 * 0.3), rel=1e-8)


def test_laplace_fit_separable_data_fails():
    d = np.array([[1.0], [2.0], [-1.0], [-2.0]])
    y = np.array([1.0, 1.0, 0.0, 0.0])
    with pytest.raises(ConvergenceError):
        laplace_fit(LogisticModel.with_isotropic_prior(d, y))


def test_laplace_rwmh_config():
    fit = laplace_fit(load_leukemia())
    cfg = laplace_rwmh_config(fit)
    assert np.allclose(cfg.proposal_chol @ cfg.proposal_chol.T, fit[1] / 2)
    assert np.allclose(cfg.init_mean, fit[0]) and cfg.reflect


# ---------------------------------------------------------------- linear Gibbs

def test_linear_full_data_conditionals():
    mam = load_mammals()
    kern = linreg_gibbs_kernel(mam)
    assert kern.shape == mam.n / 2
    ols = np.linalg.lstsq(mam.design, mam.y, rcond=None)[0]
    assert np.allclose(kern.mean, ols)
    split_half = linreg_gibbs_kernel(mam, (np.arange(31), np.arange(31, 62)), lam=0.0)
    assert split_half.shape == 31 / 2
    ols_t = np.linalg.lstsq(mam.design[:31], mam.y[:31], rcond=None)[0]
    assert np.allclose(split_half.mean, ols_t)


def test_linear_unbiased_normal_inverse_gamma():
    # under the flat prior: E[beta] = OLS, E[s2] = RSS / (n - p - 2)
    st = load_stackloss()
    kern = linreg_gibbs_kernel(st)
    ols, rss = np.linalg.lstsq(st.design, st.y, rcond=None)[:2]
    truth = np.r_[ols, rss[0] / (st.n - st.p - 2)]
    rng = np.random.default_rng(12)
    for k, m in [(0, 5), (5, 30)]:
        cfg = EstimatorConfig(k, m)
        vals = np.array([h_km(run_coupled(kern, lambda s: s, cfg, rng), cfg) for _ in range(4000)])
        se = vals.std(axis=0, ddof=1) / np.sqrt(len(vals))
        assert np.all(np.abs(vals.mean(axis=0) - truth) < 4 * se)


def test_linear_coupled_marginals():
    mam = load_mammals()
    kern = linreg_gibbs_kernel(mam, (np.arange(40), np.arange(40, 62)), lam=0.5)
    rng = np.random.default_rng(13)
    x0, y0 = np.array([1.0, 0.7, 0.4]), np.array([0.5, 0.9, 1.2])
    coupled = [kern.coupled_step(x0, y0, rng) for _ in range(10_000)]
    sx = np.array([kern.single_step(x0, rng) for _ in range(10_000)])
    sy = np.array([kern.single_step(y0, rng) for _ in range(10_000)])
    cx = np.array([c[0] for c in coupled])
    cy = np.array([c[1] for c in coupled])
    for j in range(3):
        assert stats.ks_2samp(cx[:, j], sx[:, j]).pvalue > 1e-3
        assert stats.ks_2samp(cy[:, j], sy[:, j]).pvalue > 1e-3


def test_mammal_meeting_times_short():
    mam = load_mammals()
    kern = linreg_gibbs_kernel(mam)
    rng = np.random.default_rng(14)
    taus = np.array([meeting_time(kern, rng) for _ in range(1000)])
    assert np.mean(taus <= 5) >= 0.99
