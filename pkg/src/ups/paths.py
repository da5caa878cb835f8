"""Path families lambda -> pi~_lambda on [0, 1].

Every family exposes ``log_unnorm(lam, x)`` (= log pi~_lambda(x)),
``grad_lambda(lam, x)`` (its lambda-derivative) and ``endpoint_offset``.
States are arrays with the coordinates on the last axis, so both functions
accept a single state or a stack of them.

``endpoint_offset`` is the known part of log Z_0: writing
log Z_0 = log Z_ref + endpoint_offset, an unbiased estimate of
r_01 = log(Z_1/Z_0) plus the offset estimates log(Z_1/Z_ref).  For the
evidence paths Z_ref = 1; for the cross-validation paths Z_ref = p(T).

Differentiation under the integral sign is assumed throughout; every path
shipped here has a lambda-gradient with finite moments of all orders.
"""
from __future__ import annotations

from typing import Callable, Protocol

import numpy as np
from scipy.special import expit

from .errors import ConfigError
from .mathutils import LOG_2PI, softplus
from .targets import (
    CallableTarget,
    DoubleWellTarget,
    LogisticTarget,
    NormalTranslationTarget,
    doublewell_u0,
    doublewell_u1,
)

LOG2 = float(np.log(2.0))


class PathFamily(Protocol):
    endpoint_offset: float

    def log_unnorm(self, lam, x): ...

    def grad_lambda(self, lam, x): ...

    def target_at(self, lam): ...


class GeometricPath:
    """U_lambda = (1 - lambda) U0 + lambda U1."""

    def __init__(self, u0: Callable, u1: Callable, dim: int | None = None, endpoint_offset: float = 0.0):
        self.u0 = u0
        self.u1 = u1
        self.dim = dim
        self.endpoint_offset = float(endpoint_offset)

    def log_unnorm(self, lam, x):
        return -(1.0 - lam) * self.u0(x) - lam * self.u1(x)

    def grad_lambda(self, lam, x):
        return self.u0(x) - self.u1(x)

    def target_at(self, lam):
        if self.dim is None:
            raise ConfigError("state dimension needed to build a sampler target")
        return CallableTarget(lambda x, lam=lam: self.log_unnorm(lam, x), self.dim)


def geometric(u0: Callable, u1: Callable, dim: int | None = None, endpoint_offset: float = 0.0) -> GeometricPath:
    return GeometricPath(u0, u1, dim, endpoint_offset)


class NormalTranslationPath:
    """pi~_lambda(b) = exp(-(b - lambda D)^2 / 2); every Z_lambda is sqrt(2 pi)."""

    dim = 1
    endpoint_offset = 0.0

    def __init__(self, shift: float = 4.0):
        self.shift = float(shift)

    def log_unnorm(self, lam, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * (x[..., 0] - lam * self.shift) ** 2

    def grad_lambda(self, lam, x):
        x = np.asarray(x, dtype=float)
        return self.shift * (x[..., 0] - lam * self.shift)

    def target_at(self, lam):
        return NormalTranslationTarget(float(lam), self.shift)


def normal_translation_path(shift: float = 4.0) -> NormalTranslationPath:
    return NormalTranslationPath(shift)


class DoubleWellPath(GeometricPath):
    """Gaussian well at (-2, 0) morphing into a two-mode quartic potential."""

    def __init__(self):
        super().__init__(doublewell_u0, doublewell_u1, dim=2)

    def target_at(self, lam):
        return DoubleWellTarget(float(lam))


def doublewell_path() -> DoubleWellPath:
    return DoubleWellPath()


def _gauss_log_pdf(x, mean, prec_chol, log_det_prec):
    z = (np.asarray(x, dtype=float) - mean) @ prec_chol
    p = mean.size
    return 0.5 * log_det_prec - 0.5 * p * LOG_2PI - 0.5 * np.sum(z * z, axis=-1)


class LogisticPath:
    """Logistic-regression posterior paths with Normal prior N(b, B).

    Row i contributes exp(s_i eta_i y_i) / (1 + exp(s_i eta_i)) raised to the
    power w_i, with eta_i = d_i' beta.  Rows in ``scaled`` have s_i = lambda
    (covariate scaling), rows in ``tempered`` have w_i = lambda; other rows
    have s_i = w_i = 1.  With ``anchor = (mean, cov)`` the whole posterior
    is instead geometrically bridged from N(mean, cov).
    """

    def __init__(self, design, y, prior_mean, prior_cov, scaled=None, tempered=None, anchor=None):
        design = np.atleast_2d(np.asarray(design, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        prior_mean = np.asarray(prior_mean, dtype=float).ravel()
        prior_cov = np.atleast_2d(np.asarray(prior_cov, dtype=float))
        n, p = design.shape
        if y.size != n or prior_mean.size != p or prior_cov.shape != (p, p):
            raise ConfigError(
                f"dimension mismatch: design {design.shape}, y {y.shape}, "
                f"b {prior_mean.shape}, B {prior_cov.shape}"
            )
        self.design, self.y = design, y
        self.prior_mean = prior_mean
        self.prior_cov = prior_cov
        self.prior_prec = np.linalg.inv(prior_cov)
        self.prior_prec = 0.5 * (self.prior_prec + self.prior_prec.T)
        self.prior_prec_chol = np.linalg.cholesky(self.prior_prec)
        self._prior_logdet = 2.0 * np.sum(np.log(np.diag(self.prior_prec_chol)))
        self.scaled = self._mask(scaled, n)
        self.tempered = self._mask(tempered, n)
        if np.any(self.scaled & self.tempered):
            raise ConfigError("a row cannot be both scaled and tempered")
        self.anchor = None
        if anchor is not None:
            mean, cov = (np.asarray(a, dtype=float) for a in anchor)
            prec = np.linalg.inv(cov)
            prec = 0.5 * (prec + prec.T)
            chol = np.linalg.cholesky(prec)
            self.anchor = (mean.ravel(), chol, 2.0 * np.sum(np.log(np.diag(chol))))
        # lambda = 0 turns each scaled row into a factor 1/2
        self.endpoint_offset = -float(self.scaled.sum()) * LOG2

    @staticmethod
    def _mask(rows, n):
        mask = np.zeros(n, dtype=bool)
        if rows is not None:
            rows = np.asarray(rows)
            if rows.dtype == bool:
                mask[:] = rows
            else:
                mask[rows.astype(int)] = True
        return mask

    @property
    def dim(self):
        return self.design.shape[1]

    @property
    def n(self):
        return self.design.shape[0]

    def row_scales(self, lam):
        return np.where(self.scaled, float(lam), 1.0)

    def row_weights(self, lam):
        return np.where(self.tempered, float(lam), 1.0)

    def log_prior(self, beta):
        return _gauss_log_pdf(beta, self.prior_mean, self.prior_prec_chol, self._prior_logdet)

    def log_anchor(self, beta):
        mean, chol, logdet = self.anchor
        return _gauss_log_pdf(beta, mean, chol, logdet)

    def _eta(self, beta):
        return np.asarray(beta, dtype=float) @ self.design.T

    def _row_terms(self, lam, eta):
        se = eta * self.row_scales(lam)
        return self.row_weights(lam) * (self.y * se - softplus(se))

    def log_unnorm(self, lam, beta):
        eta = self._eta(beta)
        post = self.log_prior(beta) + self._row_terms(lam, eta).sum(axis=-1)
        if self.anchor is None:
            return post
        return (1.0 - lam) * self.log_anchor(beta) + lam * post

    def grad_lambda(self, lam, beta):
        eta = self._eta(beta)
        if self.anchor is not None:
            post = self.log_prior(beta) + self._row_terms(1.0, eta).sum(axis=-1)
            return post - self.log_anchor(beta)
        # d/dlam of y s eta - softplus(s eta) with s = lam
        g_scaled = eta * (self.y - expit(lam * eta))
        # d/dlam of lam (y eta - softplus(eta))
        g_tempered = self.y * eta - softplus(eta)
        g = np.where(self.scaled, g_scaled, 0.0) + np.where(self.tempered, g_tempered, 0.0)
        return g.sum(axis=-1)

    def target_at(self, lam) -> LogisticTarget:
        lam = float(lam)
        if self.anchor is None:
            return LogisticTarget(
                self.design, self.y, self.row_weights(lam), self.row_scales(lam),
                self.prior_mean, self.prior_prec_chol,
            )
        mean, chol, _ = self.anchor
        return LogisticTarget(
            self.design, self.y, np.full(self.n, lam), np.ones(self.n),
            self.prior_mean, self.prior_prec_chol, prior_weight=lam,
            gauss_mean=mean, gauss_prec_chol=chol, gauss_weight=1.0 - lam,
        )

    @property
    def pgg_compatible(self) -> bool:
        return self.anchor is None and not self.tempered.any()

    def pgg_args(self, lam):
        """(row scales, linear term D_lam' (Y - 1/2) + B^{-1} b, B^{-1})."""
        if not self.pgg_compatible:
            raise ConfigError("only covariate-scaling paths admit the Polya-Gamma sampler")
        s = self.row_scales(lam)
        lin = self.design.T @ (s * (self.y - 0.5)) + self.prior_prec @ self.prior_mean
        return s, lin, self.prior_prec


def logistic_covariate_path(design, y, prior_mean, prior_cov) -> LogisticPath:
    """Covariates multiplied by lambda; Z_0 = 2^{-n}."""
    n = np.asarray(design).shape[0]
    return LogisticPath(design, y, prior_mean, prior_cov, scaled=np.arange(n))


def cv_covariate_path(design, y, prior_mean, prior_cov, validation) -> LogisticPath:
    """Validation covariates multiplied by lambda; Z_0 = 2^{-n_V} p(T)."""
    _require_validation(validation)
    return LogisticPath(design, y, prior_mean, prior_cov, scaled=validation)


def logistic_cv_tempering_path(design, y, prior_mean, prior_cov, validation) -> LogisticPath:
    """Validation likelihood raised to the power lambda; Z_0 = p(T)."""
    _require_validation(validation)
    return LogisticPath(design, y, prior_mean, prior_cov, tempered=validation)


def laplace_anchored_path(design, y, prior_mean, prior_cov, mean, cov) -> LogisticPath:
    """Geometric path from the normalized density N(mean, cov) to the posterior."""
    return LogisticPath(design, y, prior_mean, prior_cov, anchor=(mean, cov))


def _require_validation(validation):
    if validation is None or np.size(validation) == 0 or (
        np.asarray(validation).dtype == bool and not np.any(validation)
    ):
        raise ConfigError("the validation set is empty")


class CvTemperingPath:
    """pi~_lambda(x) = p(x) p(T | x) p(V | T, x)^lambda from model callbacks.

    ``log_prior_train(x)`` returns log p(x) + log p(T | x) and
    ``log_lik_val(x)`` returns log p(V | T, x); Z_0 = p(T), Z_1 = p(T, V).
    """

    endpoint_offset = 0.0

    def __init__(self, log_prior_train: Callable, log_lik_val: Callable, dim: int | None = None):
        self.log_prior_train = log_prior_train
        self.log_lik_val = log_lik_val
        self.dim = dim

    def log_unnorm(self, lam, x):
        return self.log_prior_train(x) + lam * self.log_lik_val(x)

    def grad_lambda(self, lam, x):
        return self.log_lik_val(x)

    def target_at(self, lam):
        if self.dim is None:
            raise ConfigError("state dimension needed to build a sampler target")
        return CallableTarget(lambda x, lam=lam: self.log_unnorm(lam, x), self.dim)


def cv_tempering_path(log_prior_train: Callable, log_lik_val: Callable, dim: int | None = None) -> CvTemperingPath:
    return CvTemperingPath(log_prior_train, log_lik_val, dim)
