"""Bayesian logistic regression: model, Polya-Gamma Gibbs kernels, Laplace fit.

The PGG chain is run on beta alone: each iteration draws
omega_i ~ PG(1, |s_i d_i' beta|) and then beta | omega from its Gaussian
conditional, which leaves the beta-marginal of the augmented target
invariant.  The coupled kernel shares the random numbers of the omega draws
between the two chains and maximally couples the two Gaussian conditionals.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp
from scipy import stats

from .. import _pycore, backend
from ..errors import ConfigError, ConvergenceError
from ..mathutils import softplus
from ..paths import (
    LogisticPath,
    cv_covariate_path,
    laplace_anchored_path,
    logistic_covariate_path,
    logistic_cv_tempering_path,
)

LAPLACE_GRAD_TOL = 1e-8
LAPLACE_MAX_ITER = 100
STEP_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LogisticModel:
    """y_i ~ Bernoulli(expit(d_i' beta)), beta ~ N(b, B)."""

    design: np.ndarray
    y: np.ndarray
    prior_mean: np.ndarray
    prior_cov: np.ndarray

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.design, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        b = np.asarray(self.prior_mean, dtype=float).ravel()
        bb = np.atleast_2d(np.asarray(self.prior_cov, dtype=float))
        n, p = d.shape
        if y.size != n or b.size != p or bb.shape != (p, p):
            raise ConfigError(f"dimension mismatch: D {d.shape}, Y {y.shape}, b {b.shape}, B {bb.shape}")
        if not np.all((y == 0) | (y == 1)):
            raise ConfigError("outcomes must be 0 or 1")
        if not np.allclose(bb, bb.T):
            raise ConfigError("prior covariance must be symmetric")
        try:
            np.linalg.cholesky(bb)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("prior covariance must be positive definite") from exc
        for name, val in (("design", d), ("y", y), ("prior_mean", b), ("prior_cov", bb)):
            object.__setattr__(self, name, val)

    @classmethod
    def with_isotropic_prior(cls, design, y, variance=10.0):
        p = np.atleast_2d(design).shape[1]
        return cls(design, y, np.zeros(p), variance * np.eye(p))

    @property
    def n(self):
        return self.design.shape[0]

    @property
    def p(self):
        return self.design.shape[1]

    def subset(self, rows) -> "LogisticModel":
        return LogisticModel(self.design[rows], self.y[rows], self.prior_mean, self.prior_cov)

    def log_likelihood(self, beta, rows=None):
        """Per-row log-likelihoods, shape (..., n) (or (..., len(rows)))."""
        d = self.design if rows is None else self.design[rows]
        y = self.y if rows is None else self.y[rows]
        eta = np.asarray(beta, dtype=float) @ d.T
        return y * eta - softplus(eta)

    def covariate_path(self) -> LogisticPath:
        return logistic_covariate_path(self.design, self.y, self.prior_mean, self.prior_cov)

    def cv_covariate_path(self, validation) -> LogisticPath:
        return cv_covariate_path(self.design, self.y, self.prior_mean, self.prior_cov, validation)

    def cv_tempering_path(self, validation) -> LogisticPath:
        return logistic_cv_tempering_path(self.design, self.y, self.prior_mean, self.prior_cov, validation)

    def laplace_path(self, fit=None) -> LogisticPath:
        mean, cov = fit if fit is not None else laplace_fit(self)
        return laplace_anchored_path(self.design, self.y, self.prior_mean, self.prior_cov, mean, cov)


class PggKernel:
    """Coupled Polya-Gamma Gibbs pair for a covariate-scaling logistic path."""

    def __init__(self, path: LogisticPath, lam: float, native: bool | None = None):
        self.path = path
        self.lam = float(lam)
        scales, lin, prec = path.pgg_args(lam)
        self.design = np.ascontiguousarray(path.design)
        self.scales = np.ascontiguousarray(scales, dtype=float)
        self.lin_term = np.ascontiguousarray(lin, dtype=float)
        self.prior_prec = np.ascontiguousarray(prec, dtype=float)
        self._init_chol = np.linalg.cholesky(path.prior_cov)
        self.native = native

    def initial_sampler(self, rng):
        return self.path.prior_mean + self._init_chol @ rng.standard_normal(self.path.dim)

    def conditional(self, beta, seed):
        """Gaussian law of the next beta given the current one and the
        omega-stream seed: (mean, lower Cholesky factor of the precision)."""
        return _pycore.pgg_conditional(
            np.asarray(beta, dtype=float), self.design, self.scales,
            self.lin_term, self.prior_prec, seed,
        )

    def single_step(self, beta, rng):
        return _pycore.pgg_step(
            np.asarray(beta, dtype=float), self.design, self.scales, self.lin_term, self.prior_prec, rng
        )

    def coupled_step(self, x, y, rng):
        x_new, y_new = _pycore.pgg_coupled_step(
            np.asarray(x, dtype=float), np.asarray(y, dtype=float),
            self.design, self.scales, self.lin_term, self.prior_prec, rng,
        )
        return x_new, y_new, bool(np.array_equal(x_new, y_new))

    def trajectories(self, m, max_iterations, rng):
        x0 = self.initial_sampler(rng)
        y0 = self.initial_sampler(rng)
        return backend.pgg_run(
            self.design, self.scales, self.lin_term, self.prior_prec,
            x0, y0, int(m), int(max_iterations), rng, native=self.native,
        )


def pgg_kernel(model: LogisticModel, lam: float, path_kind: str = "covariate",
               validation=None, native: bool | None = None) -> PggKernel:
    if path_kind == "covariate":
        path = model.covariate_path()
    elif path_kind == "cv-covariate":
        path = model.cv_covariate_path(validation)
    else:
        raise ConfigError(f"unknown PGG path kind {path_kind!r}")
    return PggKernel(path, lam, native)


def laplace_fit(model: LogisticModel, tol: float = LAPLACE_GRAD_TOL, max_iter: int = LAPLACE_MAX_ITER):
    """Maximum-likelihood estimate and the inverse observed information.

    Newton-Raphson on the log-likelihood (the prior is not used), with step
    halving whenever a full step would decrease the log-likelihood.
    Converged once the gradient norm is below ``tol`` and the Newton step
    is negligible; separable data never satisfy the second condition.
    """
    d, y = model.design, model.y
    beta = np.zeros(model.p)

    def loglik(b):
        eta = d @ b
        return float(np.sum(y * eta - softplus(eta)))

    current = loglik(beta)
    for _ in range(max_iter):
        eta = d @ beta
        prob = expit(eta)
        grad = d.T @ (y - prob)
        info = (d.T * (prob * (1.0 - prob))) @ d
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("singular information matrix in Newton iteration") from exc
        # on separable data the gradient vanishes while the Newton step does not
        if np.linalg.norm(grad) < tol and np.linalg.norm(step) < STEP_TOL * (1.0 + np.linalg.norm(beta)):
            break
        t = 1.0
        while t > 1e-10:
            cand = beta + t * step
            val = loglik(cand)
            if val >= current - 1e-12 * abs(current):
                break
            t *= 0.5
        beta, current = cand, val
    else:
        raise ConvergenceError(f"Newton iteration did not converge in {max_iter} steps (separable data?)")
    prob = expit(d @ beta)
    info = (d.T * (prob * (1.0 - prob))) @ d
    cov = np.linalg.inv(info)
    cov = 0.5 * (cov + cov.T)
    np.linalg.cholesky(cov)
    return beta, cov


def _laplace_proposal(model, fit, df):
    mean, cov = fit if fit is not None else laplace_fit(model)
    return stats.multivariate_t(loc=mean, shape=cov, df=df)


def _is_draws(model, n_draws, rng, fit, df):
    prop = _laplace_proposal(model, fit, df)
    draws = prop.rvs(size=n_draws, random_state=rng).reshape(n_draws, model.p)
    log_q = prop.logpdf(draws)
    log_prior = stats.multivariate_normal(model.prior_mean, model.prior_cov).logpdf(draws)
    return draws, np.atleast_1d(log_prior - log_q)


def _log_mean_exp(lw):
    out = logsumexp(lw) - np.log(lw.size)
    w = np.exp(lw - lw.max())
    # delta-method standard error of log(mean w)
    se = np.std(w, ddof=1) / np.sqrt(lw.size) / np.mean(w)
    return float(out), float(se)


def log_evidence_is(model: LogisticModel, n_draws: int, rng, fit=None, df: float = 10.0, chunk: int = 20_000):
    """Importance-sampling estimate of log p(Y) with a Student-t proposal
    centred and scaled by the Laplace fit.  Returns (estimate, standard error)."""
    lws = []
    for start in range(0, n_draws, chunk):
        draws, lw = _is_draws(model, min(chunk, n_draws - start), rng, fit, df)
        lws.append(lw + model.log_likelihood(draws).sum(axis=-1))
    return _log_mean_exp(np.concatenate(lws))


def loo_log_predictive_is(model: LogisticModel, n_draws: int, rng, fit=None, df: float = 10.0):
    """log p(y_i | y_{-i}) for every i, as differences of importance-sampled
    log-evidences sharing one set of proposal draws."""
    draws, lw = _is_draws(model, n_draws, rng, fit, df)
    ll = model.log_likelihood(draws)
    full = lw + ll.sum(axis=-1)
    log_full = logsumexp(full)
    return np.array([log_full - logsumexp(full - ll[:, i]) for i in range(model.n)])


class LogisticCvProblem:
    """Per-split path and kernels for logistic cross-validation.

    ``variant="covariate"`` scales the validation covariates by lambda and
    uses the PGG sampler; ``variant="tempering"`` raises the validation
    likelihood to the power lambda and uses RWMH with ``rwmh_cfg``.
    """

    def __init__(self, model: LogisticModel, variant: str = "covariate", rwmh_cfg=None,
                 native: bool | None = None):
        if variant not in ("covariate", "tempering"):
            raise ConfigError(f"unknown CV path variant {variant!r}")
        if variant == "tempering" and rwmh_cfg is None:
            raise ConfigError("the tempering path needs an RWMH configuration")
        self.model = model
        self.variant = variant
        self.rwmh_cfg = rwmh_cfg
        self.native = native

    @property
    def n(self):
        return self.model.n

    def setup(self, split):
        from .rwmh import RwmhKernel

        if self.variant == "covariate":
            path = self.model.cv_covariate_path(split.validation)
            return path, lambda lam: PggKernel(path, lam, self.native)
        path = self.model.cv_tempering_path(split.validation)
        return path, lambda lam: RwmhKernel(path.target_at(lam), self.rwmh_cfg, self.native)


def laplace_rwmh_config(fit, reflect: bool = True):
    """Initial law N(beta_hat, V_hat) and proposal covariance V_hat / p."""
    from .rwmh import RwmhConfig

    mean, cov = fit
    return RwmhConfig.from_covariances(cov / mean.size, mean, cov, reflect=reflect)
