"""Unbiased path-sampling and cross-validation estimators, and their
aggregation into confidence intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Protocol

import numpy as np

from .errors import ConfigError, NoMeetingError
from .tuning import LambdaProposal, TuningReport
from .unbiased import DEFAULT_MAX_ITERATIONS, EstimatorConfig, h_km, run_coupled

Z_95 = 1.96


@dataclass
class UpsEstimate:
    """One replicate.

    ``value`` = raw_e_hat / q_density estimates r_01; ``estimate`` is the
    reported quantity sign * (value + offset), where the offset is the
    path's known endpoint constant and sign = -1 for cross-validation.
    """

    lam: float
    value: float
    raw_e_hat: float
    q_density: float
    tau: int
    cost_units: int
    offset: float = 0.0
    sign: float = 1.0
    left_out: int | None = None
    replicate: int | None = None

    @property
    def estimate(self) -> float:
        return self.sign * (self.value + self.offset)


@dataclass(frozen=True)
class DataSplit:
    train: np.ndarray
    validation: np.ndarray

    def __post_init__(self):
        t = np.sort(np.asarray(self.train, dtype=int))
        v = np.sort(np.asarray(self.validation, dtype=int))
        if np.intersect1d(t, v).size:
            raise ConfigError("training and validation sets overlap")
        object.__setattr__(self, "train", t)
        object.__setattr__(self, "validation", v)

    @property
    def n_train(self):
        return self.train.size

    @property
    def n_validation(self):
        return self.validation.size


def sample_split(n: int, n_train: int, rng) -> DataSplit:
    """Uniform over the C(n, n_train) splits, via a uniform permutation."""
    if not 1 <= n_train <= n - 1:
        raise ConfigError(f"need 1 <= n_T <= n - 1, got n_T={n_train}, n={n}")
    perm = rng.permutation(n)
    return DataSplit(perm[:n_train], perm[n_train:])


def fixed_tuning(k: int, m: int) -> TuningReport:
    """Same (k, m) for every lambda and q uniform on [0, 1]."""
    return TuningReport(
        grid=[0.0, 1.0], kind="equispaced", k=[k, k], m=[m, m], tau_mean=[np.nan] * 2,
        tau_q99=[np.nan] * 2, sqrt_m2=[1.0, 1.0], masses=[1.0],
    )


def ups_estimate(path, q: LambdaProposal | None, tuning: TuningReport, kernel_factory: Callable, rng,
                 max_iterations: int = DEFAULT_MAX_ITERATIONS) -> UpsEstimate:
    """Draw lambda ~ q, estimate E(lambda) by H_{k:m} with h = grad_lambda
    (k, m of the nearest grid point) and return E_hat / q(lambda)."""
    q = tuning.proposal if q is None else q
    lam, dens = q.sample(rng)
    _, k, m = tuning.lookup(lam)
    cfg = EstimatorConfig(k, m, max_iterations)
    pair = kernel_factory(lam)
    try:
        run = run_coupled(pair, lambda x: path.grad_lambda(lam, x), cfg, rng)
    except NoMeetingError as exc:
        raise exc.with_context(lam=lam) from exc
    e_hat = float(np.asarray(h_km(run, cfg)).reshape(-1)[0])
    return UpsEstimate(
        lam=lam, value=e_hat / dens, raw_e_hat=e_hat, q_density=dens, tau=run.tau,
        cost_units=run.cost_units, offset=float(getattr(path, "endpoint_offset", 0.0)),
    )


class CvProblem(Protocol):
    """Builds, for a data split, the path and kernel factory whose r_01 is
    log p(V | T) up to the path's endpoint offset."""

    n: int

    def setup(self, split: DataSplit) -> tuple[object, Callable]: ...


def cv_estimate(problem: CvProblem, n_train: int, tuning: TuningReport, rng,
                q: LambdaProposal | None = None, max_iterations: int = DEFAULT_MAX_ITERATIONS) -> UpsEstimate:
    """Random split, then minus the UPS estimate of log p(V | T); unbiased for CV."""
    split = sample_split(problem.n, n_train, rng)
    path, factory = problem.setup(split)
    est = ups_estimate(path, q, tuning, factory, rng, max_iterations)
    est.sign = -1.0
    if split.n_validation == 1:
        est.left_out = int(split.validation[0])
    return est


def mse_cv_estimate(linear, n_train: int, cfg: EstimatorConfig, rng) -> UpsEstimate:
    """Random split, then H_{k:m} on the training posterior with
    h(beta, s2) = n_V s2 + ||D_V beta - Y_V||^2."""
    from .models.linear import LinregGibbsKernel

    split = sample_split(linear.n, n_train, rng)
    pair = LinregGibbsKernel(linear, split.train, split.validation, lam=0.0)
    run = run_coupled(pair, linear.mse_h(split.validation), cfg, rng)
    val = float(np.asarray(h_km(run, cfg)).reshape(-1)[0])
    return UpsEstimate(
        lam=math.nan, value=val, raw_e_hat=val, q_density=1.0, tau=run.tau, cost_units=run.cost_units,
        left_out=int(split.validation[0]) if split.n_validation == 1 else None,
    )


@dataclass(frozen=True)
class AggregateSummary:
    M: int
    mean: float
    sample_sd: float
    ci_low: float
    ci_high: float
    total_cost: int
    extra: dict = field(default_factory=dict)

    @property
    def se(self) -> float:
        return self.sample_sd / math.sqrt(self.M)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_dict(self) -> dict:
        return {
            "M": self.M, "mean": self.mean, "sd": self.sample_sd, "se": self.se,
            "ci": [self.ci_low, self.ci_high], "total_cost": self.total_cost, **self.extra,
        }


def aggregate(estimates: Iterable) -> AggregateSummary:
    """mean +- 1.96 s / sqrt(M) with s the sample sd (divisor M - 1)."""
    estimates = list(estimates)
    if len(estimates) < 2:
        raise ConfigError("need at least two estimates to aggregate")
    if isinstance(estimates[0], UpsEstimate):
        vals = np.array([e.estimate for e in estimates])
        cost = int(sum(e.cost_units for e in estimates))
    else:
        vals = np.asarray(estimates, dtype=float)
        cost = 0
    M = vals.size
    mean = float(vals.mean())
    sd = float(vals.std(ddof=1))
    half = Z_95 * sd / math.sqrt(M)
    return AggregateSummary(M, mean, sd, mean - half, mean + half, cost)


def replicate_rng(seed: int, index: int) -> np.random.Generator:
    """Stream for replicate ``index`` under master ``seed``, independent of
    which worker runs it."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))
