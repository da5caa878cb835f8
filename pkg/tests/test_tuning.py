import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from kernels import AR1Normal, IidNormal
from ups.errors import ConfigError, DegenerateProposalError, NoMeetingError
from ups.paths import normal_translation_path
from ups.tuning import (
    LambdaGrid,
    LambdaProposal,
    TuningReport,
    build_proposal,
    choose_k,
    choose_m,
    estimate_m2,
    sample_lambda,
    survey_meetings,
    tune,
)


def test_equispaced_grid():
    g = LambdaGrid.equispaced(10)
    assert len(g) == 11 and g.points[0] == 0.0 and g.points[-1] == 1.0
    assert np.allclose(np.diff(g.points), 0.1)


def test_log_grid():
    g = LambdaGrid.log_equispaced(10)
    assert g.points[0] == 0.0 and g.points[-1] == 1.0
    assert np.allclose(g.points[1:], np.exp(np.arange(11) - 10.0))


@pytest.mark.parametrize("pts", [[0.2, 1.0], [0.0, 0.9], [0.0, 0.6, 0.4, 1.0], [0.0]])
def test_bad_grids(pts):
    with pytest.raises(ConfigError):
        LambdaGrid(pts)


def test_nearest_index_ties_to_smaller():
    g = LambdaGrid.equispaced(2)
    assert g.nearest_index(0.25) == 0
    assert g.nearest_index(0.75) == 1
    assert g.nearest_index(0.26) == 1
    assert g.nearest_index(1.0) == 2


@pytest.mark.parametrize("samples,q,mult,k", [([3] * 10, 0.99, 1.0, 3), ([3] * 10, 0.99, 2.0, 6)])
def test_choose_k_examples(samples, q, mult, k):
    assert choose_k(samples, q, mult) == k


def test_choose_k_type7_interpolates():
    # type-7 at 0.99 for 1..100: 99 + 0.01 (100 - 99) = 99.01, so k = 100
    oracle = np.quantile(np.arange(1, 101), 0.99, method="linear")
    assert oracle == pytest.approx(99.01)
    assert choose_k(list(range(1, 101)), 0.99) == 100
    assert choose_k(list(range(1, 101)), 0.99, 2.0) == 199


@given(st.lists(st.integers(1, 10_000), min_size=1, max_size=200), st.floats(0.01, 0.99), st.floats(0.5, 3.0))
def test_choose_k_is_ceiling_of_scaled_quantile(samples, q, mult):
    k = choose_k(samples, q, mult)
    target = mult * np.quantile(samples, q)
    assert k - 1 < target + 1e-6 and target <= k + 1e-6


def test_choose_k_rejects_empty():
    with pytest.raises(ConfigError):
        choose_k([])


def test_choose_m_examples():
    # 5 * 2 + 4 - 4 = 10
    assert list(choose_m([2, 2], [4, 4])) == [10, 10]
    assert list(choose_m([2, 4], [3, 7])) == [24, 20]


@given(st.lists(st.tuples(st.integers(0, 200), st.floats(1.0, 500.0)), min_size=1, max_size=30))
def test_choose_m_balances_cost(pairs):
    ks = np.array([p[0] for p in pairs])
    taus = np.array([p[1] for p in pairs])
    ms = choose_m(ks, taus)
    total = ms + taus
    assert total.max() - total.min() <= 1.0 + 1e-9
    assert np.all(ms >= 5 * ks)


def test_build_proposal_examples():
    q = build_proposal(LambdaGrid([0.0, 0.5, 1.0]), np.sqrt([1.0, 1.0, 9.0]))
    assert np.allclose(q.masses, [1 / 3, 2 / 3], rtol=0, atol=1e-15)
    assert np.allclose(q.densities, [2 / 3, 4 / 3])
    flat = build_proposal(LambdaGrid.equispaced(10), np.full(11, 2.5))
    assert np.allclose(flat.densities, 1.0)


def test_build_proposal_degenerate_and_floor():
    with pytest.raises(DegenerateProposalError):
        build_proposal(LambdaGrid.equispaced(3), np.zeros(4))
    q = build_proposal(LambdaGrid.equispaced(3), [0.0, 0.0, 0.0, 1.0])
    assert np.all(q.masses > 0)
    with pytest.raises(ConfigError):
        build_proposal(LambdaGrid.equispaced(3), [1.0, -1.0, 0.0, 1.0])


@given(st.lists(st.floats(0.0, 1e6), min_size=2, max_size=25).filter(lambda s: max(s) > 0))
def test_proposal_normalized_and_positive(s):
    grid = LambdaGrid.equispaced(len(s) - 1)
    q = build_proposal(grid, s)
    assert abs(q.masses.sum() - 1.0) < 1e-12
    assert np.all(q.masses > 0)
    assert np.allclose(q.densities * np.diff(grid.points), q.masses, rtol=1e-12)


def test_sample_single_interval():
    rng = np.random.default_rng(3)
    q = LambdaProposal.uniform()
    draws = [sample_lambda(q, rng) for _ in range(5000)]
    lams = np.array([d[0] for d in draws])
    assert all(d[1] == 1.0 for d in draws)
    assert np.all((lams > 0) & (lams < 1))
    assert stats.kstest(lams, "uniform").pvalue > 1e-3


def test_sample_frequencies_and_density_values():
    rng = np.random.default_rng(1)
    q = LambdaProposal([0.0, 0.5, 1.0], [1 / 3, 2 / 3])
    draws = [q.sample(rng) for _ in range(100_000)]
    lams = np.array([d[0] for d in draws])
    dens = np.array([d[1] for d in draws])
    counts = np.bincount(q.interval_of(lams), minlength=2)
    se = np.sqrt(100_000 * (1 / 3) * (2 / 3))
    assert abs(counts[0] - 100_000 / 3) < 4 * se
    assert np.all(dens == np.where(lams < 0.5, (1 / 3) / 0.5, (2 / 3) / 0.5))


def test_sample_chi_square_on_log_grid():
    rng = np.random.default_rng(2)
    grid = LambdaGrid.log_equispaced(6)
    q = build_proposal(grid, np.linspace(1, 3, len(grid)))
    lams = np.array([q.sample(rng)[0] for _ in range(100_000)])
    counts = np.bincount(q.interval_of(lams), minlength=q.masses.size)
    assert stats.chisquare(counts, 100_000 * q.masses).pvalue > 1e-3
    assert np.array([q.pdf(x) for x in lams[:200]]) == pytest.approx(
        [q.densities[q.interval_of(x)] for x in lams[:200]])


def test_pdf_integrates_to_one():
    grid = LambdaGrid.log_equispaced(5)
    q = build_proposal(grid, np.arange(1.0, len(grid) + 1))
    xs = np.linspace(0, 1, 2_000_001)
    assert np.trapezoid(q.pdf(xs), xs) == pytest.approx(1.0, abs=1e-4)


def test_survey_small_for_iid_kernel():
    taus = survey_meetings(lambda lam: IidNormal(), LambdaGrid.equispaced(2), 50, 0)
    assert all(np.all(t <= 2) for t in taus)


def test_survey_context_on_failure():
    class Never(IidNormal):
        def coupled_step(self, x, y, rng):
            return rng.standard_normal(1), rng.standard_normal(1) + 5, False

    with pytest.raises(NoMeetingError) as info:
        survey_meetings(lambda lam: Never(), LambdaGrid.equispaced(2), 3, 0, max_iterations=10)
    assert info.value.context["grid_index"] == 0


def test_estimate_m2_deterministic():
    grid = LambdaGrid.equispaced(4)
    m2, est = estimate_m2(None, None, grid, [0] * 5, [0] * 5, 10, 0, estimator=lambda lam, k, m, rng: 2.0)
    assert np.all(m2 == 4.0) and est.shape == (5, 10)


def test_estimate_m2_normal_toy_positive():
    path = normal_translation_path(4.0)

    def factory(lam):
        return AR1Normal(mu=4 * lam, var=1.0, rho=0.5, init_mean=4 * lam)

    grid = LambdaGrid.equispaced(2)
    m2, est = estimate_m2(factory, path, grid, [2, 2, 2], [10, 10, 10], 200, 3)
    assert np.all(m2 > 0) and np.all(np.isfinite(m2))
    # E(lambda) = 0, so m2 is the variance: sample mean consistent with zero
    assert np.all(np.abs(est.mean(axis=1)) < 4 * est.std(axis=1, ddof=1) / np.sqrt(200))


def test_tune_pipeline_deterministic_and_round_trips(tmp_path):
    path = normal_translation_path(4.0)
    factory = lambda lam: AR1Normal(mu=4 * lam, var=1.0, rho=0.6, init_mean=0.0)  # noqa: E731
    a = tune(factory, path, LambdaGrid.equispaced(4), 30, 20, 5)
    b = tune(factory, path, LambdaGrid.equispaced(4), 30, 20, 5)
    assert np.array_equal(a.k, b.k) and np.array_equal(a.sqrt_m2, b.sqrt_m2)
    assert np.all(a.m >= a.k) and np.all(a.m >= 5 * a.k)
    a.save(tmp_path / "t.json")
    c = TuningReport.load(tmp_path / "t.json")
    assert np.array_equal(c.grid, a.grid) and np.array_equal(c.m, a.m)
    assert np.allclose(c.proposal.masses, a.proposal.masses, rtol=0, atol=0)
    assert all(np.array_equal(x, y) for x, y in zip(c.meeting_times, a.meeting_times))
    l, k, m = c.lookup(0.3)
    assert (l, k, m) == (1, int(a.k[1]), int(a.m[1]))


def test_report_invariants():
    with pytest.raises(ConfigError):
        TuningReport([0, 1], "custom", [3, 3], [2, 5], [1, 1], [1, 1], [1, 1], [1.0])
