"""Linear regression with the flat prior p(beta, sigma^2) ∝ 1/sigma^2.

States are vectors (beta_1, ..., beta_p, sigma^2).  The Gibbs kernel targets
the validation-tempered posterior

    pi_lam(beta, s2) ∝ s2^{-1} p(Y_T | beta, s2) p(Y_V | beta, s2)^lam,

whose conditionals are beta | s2 ~ N(mu_lam, s2 A_lam^{-1}) with
A_lam = D_T'D_T + lam D_V'D_V, and s2 | beta ~ InvGamma(a_lam, b_lam).
The improper prior makes the tempered posterior proper as soon as n_T > p.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import gammaln

from ..coupling import MAX_REJECTIONS
from ..errors import ConfigError, NumericDomainError
from ..mathutils import LOG_2PI
from ..paths import CvTemperingPath


@dataclass(frozen=True, eq=False)
class LinearModel:
    design: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.design, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        n, p = d.shape
        if y.size != n:
            raise ConfigError(f"design has {n} rows but there are {y.size} outcomes")
        if n <= p or np.linalg.matrix_rank(d) < p:
            raise ConfigError("need n > p and a full-rank design")
        object.__setattr__(self, "design", d)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.design.shape[0]

    @property
    def p(self):
        return self.design.shape[1]

    def log_lik(self, state, rows=None):
        """sum_j log N(y_j; d_j' beta, s2) over ``rows`` (all rows by default)."""
        state = np.asarray(state, dtype=float)
        beta, s2 = state[..., : self.p], state[..., self.p]
        d = self.design if rows is None else self.design[rows]
        y = self.y if rows is None else self.y[rows]
        resid = y - beta @ d.T
        with np.errstate(divide="ignore", invalid="ignore"):
            out = -0.5 * y.size * (LOG_2PI + np.log(s2)) - 0.5 * np.sum(resid * resid, axis=-1) / s2
        return np.where(s2 > 0, out, -np.inf)

    def log_prior(self, state):
        s2 = np.asarray(state, dtype=float)[..., self.p]
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(s2 > 0, -np.log(s2), -np.inf)

    def cv_path(self, train, validation) -> CvTemperingPath:
        """log pi~_lam = log prior + log p(Y_T | .) + lam log p(Y_V | .)."""
        train = np.asarray(train, dtype=int)
        validation = np.asarray(validation, dtype=int)
        if validation.size == 0:
            raise ConfigError("the validation set is empty")
        return CvTemperingPath(
            lambda x: self.log_prior(x) + self.log_lik(x, train),
            lambda x: self.log_lik(x, validation),
            dim=self.p + 1,
        )

    def mse_h(self, validation):
        """h(beta, s2) = n_V s2 + ||D_V beta - Y_V||^2."""
        validation = np.asarray(validation, dtype=int)
        d, y = self.design[validation], self.y[validation]

        def h(state):
            state = np.asarray(state, dtype=float)
            r = state[..., : self.p] @ d.T - y
            return validation.size * state[..., self.p] + np.sum(r * r, axis=-1)

        return h


def _invgamma_logpdf(z, a, b):
    return a * np.log(b) - gammaln(a) - (a + 1.0) * np.log(z) - b / z


def _maximal_invgamma(a, b1, b2, rng):
    """Maximal coupling of InvGamma(a, b1) and InvGamma(a, b2)."""
    x = b1 / rng.gamma(a)
    if np.log(rng.random()) + _invgamma_logpdf(x, a, b1) <= _invgamma_logpdf(x, a, b2):
        return x, x
    for _ in range(MAX_REJECTIONS):
        y = b2 / rng.gamma(a)
        if np.log(rng.random()) + _invgamma_logpdf(y, a, b2) > _invgamma_logpdf(y, a, b1):
            return x, y
    raise NumericDomainError("maximal coupling rejection loop exceeded its cap")


def _maximal_scaled_normal(p, s1, s2, rng):
    """Maximal coupling of N(0, s1^2 I_p) and N(0, s2^2 I_p)."""

    def logpdf(u, s):
        return -p * np.log(s) - 0.5 * float(u @ u) / (s * s)

    x = s1 * rng.standard_normal(p)
    if np.log(rng.random()) + logpdf(x, s1) <= logpdf(x, s2):
        return x, x
    for _ in range(MAX_REJECTIONS):
        y = s2 * rng.standard_normal(p)
        if np.log(rng.random()) + logpdf(y, s2) > logpdf(y, s1):
            return x, y
    raise NumericDomainError("maximal coupling rejection loop exceeded its cap")


class LinregGibbsKernel:
    """Two-block Gibbs sampler for the tempered posterior, with its
    coupling by maximal couplings of each conditional update."""

    def __init__(self, model: LinearModel, train=None, validation=None, lam: float = 1.0):
        n = model.n
        train = np.arange(n) if train is None else np.asarray(train, dtype=int)
        validation = np.zeros(0, dtype=int) if validation is None else np.asarray(validation, dtype=int)
        self.model = model
        self.lam = float(lam)
        dt, yt = model.design[train], model.y[train]
        dv, yv = model.design[validation], model.y[validation]
        self._dt, self._yt, self._dv, self._yv = dt, yt, dv, yv
        a_mat = dt.T @ dt + self.lam * (dv.T @ dv)
        try:
            self._chol = np.linalg.cholesky(a_mat)
        except np.linalg.LinAlgError as exc:
            raise NumericDomainError("tempered Gram matrix is singular") from exc
        rhs = dt.T @ yt + self.lam * (dv.T @ yv)
        self.mean = solve_triangular(self._chol.T, solve_triangular(self._chol, rhs, lower=True), lower=False)
        self.shape = 0.5 * (train.size + self.lam * validation.size)
        self.p = model.p

    def _rate(self, beta):
        rt = self._yt - self._dt @ beta
        rv = self._yv - self._dv @ beta
        return 0.5 * float(rt @ rt) + 0.5 * self.lam * float(rv @ rv)

    def _beta_from(self, u):
        # u is the standardized draw: beta = mean + A^{-1/2} u, scale applied by caller
        return self.mean + solve_triangular(self._chol.T, u, lower=False)

    def initial_sampler(self, rng):
        return np.concatenate([rng.standard_normal(self.p), [rng.exponential(1.0)]])

    def single_step(self, state, rng):
        s2 = float(state[self.p])
        beta = self._beta_from(np.sqrt(s2) * rng.standard_normal(self.p))
        s2_new = self._rate(beta) / rng.gamma(self.shape)
        return np.concatenate([beta, [s2_new]])

    def coupled_step(self, x, y, rng):
        sx, sy = np.sqrt(float(x[self.p])), np.sqrt(float(y[self.p]))
        ux, uy = _maximal_scaled_normal(self.p, sx, sy, rng)
        bx = self._beta_from(ux)
        by = bx if uy is ux else self._beta_from(uy)
        s2x, s2y = _maximal_invgamma(self.shape, self._rate(bx), self._rate(by), rng)
        x_new = np.concatenate([bx, [s2x]])
        y_new = np.concatenate([by, [s2y]])
        return x_new, y_new, bool(np.array_equal(x_new, y_new))


def linreg_gibbs_kernel(model: LinearModel, split=None, lam: float = 1.0) -> LinregGibbsKernel:
    """``split`` is a DataSplit (or a (train, validation) pair); None = full data."""
    if split is None:
        return LinregGibbsKernel(model, None, None, lam)
    train, validation = (split.train, split.validation) if hasattr(split, "train") else split
    return LinregGibbsKernel(model, train, validation, lam)


class LinearCvProblem:
    """Per-split tempering path and Gibbs kernels for the log-score CV."""

    def __init__(self, model: LinearModel):
        self.model = model

    @property
    def n(self):
        return self.model.n

    def setup(self, split):
        path = self.model.cv_path(split.train, split.validation)
        return path, lambda lam: LinregGibbsKernel(self.model, split.train, split.validation, lam)
