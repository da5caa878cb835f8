import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from kernels import AR1Normal
from oracles import linear_loo_logscore, linear_loo_mse
from ups.errors import ConfigError
from ups.estimators import (
    DataSplit,
    UpsEstimate,
    aggregate,
    cv_estimate,
    fixed_tuning,
    mse_cv_estimate,
    replicate_rng,
    sample_split,
    ups_estimate,
)
from ups.models import LinearCvProblem, LinearModel
from ups.paths import geometric, normal_translation_path
from ups.tuning import LambdaGrid, LambdaProposal, TuningReport, build_proposal
from ups.unbiased import EstimatorConfig


def test_aggregate_constant():
    s = aggregate([1.0, 1.0, 1.0, 1.0])
    assert (s.mean, s.sample_sd, s.ci_low, s.ci_high) == (1.0, 0.0, 1.0, 1.0)


def test_aggregate_two_values():
    s = aggregate([0.0, 2.0])
    assert s.mean == 1.0
    assert s.sample_sd == pytest.approx(math.sqrt(2))
    assert (s.ci_low, s.ci_high) == pytest.approx((-0.96, 2.96))


def test_aggregate_needs_two():
    with pytest.raises(ConfigError):
        aggregate([1.0])


def test_aggregate_estimates_sums_cost():
    ests = [UpsEstimate(0.5, v, v, 1.0, 2, c) for v, c in [(1.0, 10), (3.0, 12), (2.0, 7)]]
    s = aggregate(ests)
    assert s.total_cost == 29 and s.mean == 2.0 and s.M == 3


@given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50))
def test_aggregate_invariants(vals):
    s = aggregate(vals)
    assert s.ci_low <= s.mean <= s.ci_high
    assert s.half_width == pytest.approx(1.96 * s.sample_sd / math.sqrt(len(vals)), abs=1e-9)


def test_aggregate_coverage():
    rng = np.random.default_rng(0)
    hits = 0
    reps = 1000
    for _ in range(reps):
        s = aggregate(rng.standard_normal(10_000))
        hits += s.ci_low <= 0.0 <= s.ci_high
    assert abs(hits / reps - 0.95) < 4 * math.sqrt(0.95 * 0.05 / reps)


def test_split_two_points():
    rng = np.random.default_rng(1)
    picks = np.array([sample_split(2, 1, rng).train[0] for _ in range(10_000)])
    assert abs(picks.mean() - 0.5) < 4 * 0.5 / 100


def test_split_five_choose_three():
    rng = np.random.default_rng(2)
    combos = {c: i for i, c in enumerate(itertools.combinations(range(5), 3))}
    assert len(combos) == 10
    counts = np.zeros(10)
    for _ in range(20_000):
        s = sample_split(5, 3, rng)
        counts[combos[tuple(s.train)]] += 1
        assert sorted(np.r_[s.train, s.validation]) == list(range(5))
    assert stats.chisquare(counts).pvalue > 1e-3


def test_split_leave_one_out():
    rng = np.random.default_rng(3)
    left = np.array([sample_split(7, 6, rng).validation for _ in range(7000)]).ravel()
    assert stats.chisquare(np.bincount(left, minlength=7)).pvalue > 1e-3


@pytest.mark.parametrize("n_t", [0, 5])
def test_split_range(n_t, rng):
    with pytest.raises(ConfigError):
        sample_split(5, n_t, rng)


def test_split_overlap_rejected():
    with pytest.raises(ConfigError):
        DataSplit([0, 1], [1, 2])


def test_replicate_rng_is_keyed_by_index():
    a = replicate_rng(5, 3).random(4)
    assert np.array_equal(a, replicate_rng(5, 3).random(4))
    assert not np.array_equal(a, replicate_rng(5, 4).random(4))
    assert not np.array_equal(a, replicate_rng(6, 3).random(4))


class GaussianGeometric:
    """Geometric path between N(0, 1) and N(mu, s^2) e^{-c}: every pi_lambda is Gaussian."""

    def __init__(self, mu=1.5, s=0.5, c=0.3):
        self.mu, self.s, self.c = mu, s, c
        self.path = geometric(lambda x: 0.5 * x[..., 0] ** 2,
                              lambda x: 0.5 * (x[..., 0] - mu) ** 2 / s**2 + c)
        self.r01 = math.log(s) - c

    def factory(self, lam):
        prec = (1 - lam) + lam / self.s**2
        mean = lam * self.mu / self.s**2 / prec
        return AR1Normal(mu=mean, var=1 / prec, rho=0.5, init_mean=0.0, init_sd=1.0)


def test_ups_unbiased_on_gaussian_path():
    g = GaussianGeometric()
    tuning = fixed_tuning(3, 12)
    rng = np.random.default_rng(4)
    ests = [ups_estimate(g.path, None, tuning, g.factory, rng) for _ in range(10_000)]
    for e in ests[:50]:
        assert e.value * e.q_density == pytest.approx(e.raw_e_hat, rel=1e-14)
    s = aggregate(ests)
    assert abs(s.mean - g.r01) < 4 * s.se


def test_ups_estimand_invariant_to_q():
    path = normal_translation_path(4.0)

    def factory(lam):
        return AR1Normal(mu=4 * lam, var=1.0, rho=0.5, init_mean=-1.0, init_sd=2.0)

    grid = LambdaGrid.equispaced(4)
    base = dict(grid=grid.points, kind="equispaced", k=[2] * 5, m=[10] * 5, tau_mean=[0] * 5,
                tau_q99=[0] * 5, sqrt_m2=[1] * 5)
    q_flat = LambdaProposal(grid.points, np.full(4, 0.25))
    q_shaped = build_proposal(grid, [1, 2, 4, 2, 1])
    results = []
    for q, seed in ((q_flat, 5), (q_shaped, 6)):
        rep = TuningReport(**base, masses=q.masses)
        rng = np.random.default_rng(seed)
        results.append(aggregate([ups_estimate(path, q, rep, factory, rng) for _ in range(4000)]))
    a, b = results
    assert abs(a.mean) < 4 * a.se and abs(b.mean) < 4 * b.se
    assert abs(a.mean - b.mean) < 4 * math.hypot(a.se, b.se)


def _small_linear(seed=7, n=10):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    d = np.column_stack([np.ones(n), x])
    return LinearModel(d, 1.0 + 0.5 * x + 0.7 * rng.normal(size=n))


def test_cv_estimate_unbiased_for_loo_logscore():
    lin = _small_linear()
    oracle = linear_loo_logscore(lin)
    rng = np.random.default_rng(8)
    problem = LinearCvProblem(lin)
    tuning = fixed_tuning(5, 15)
    ests = [cv_estimate(problem, lin.n - 1, tuning, rng) for _ in range(4000)]
    assert all(e.sign == -1.0 and e.left_out is not None for e in ests)
    s = aggregate(ests)
    assert abs(s.mean - oracle) < 4 * s.se


def test_mse_cv_unbiased():
    lin = _small_linear(seed=9)
    oracle = linear_loo_mse(lin)
    rng = np.random.default_rng(10)
    cfg = EstimatorConfig(5, 15)
    s = aggregate([mse_cv_estimate(lin, lin.n - 1, cfg, rng) for _ in range(5000)])
    assert abs(s.mean - oracle) < 4 * s.se


def test_mse_h_perfect_fit_is_zero():
    lin = _small_linear()
    beta = np.linalg.lstsq(lin.design, lin.y, rcond=None)[0]
    exact = LinearModel(lin.design, lin.design @ beta)
    h = exact.mse_h(np.array([1, 4]))
    assert h(np.r_[beta, 0.0]) == pytest.approx(0.0, abs=1e-20)


def test_estimate_sign_and_offset():
    e = UpsEstimate(0.3, 2.0, 1.0, 0.5, 3, 10, offset=-1.5, sign=-1.0)
    assert e.estimate == pytest.approx(-0.5)
