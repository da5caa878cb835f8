"""Fixed-lambda target densities understood by both chain backends.

Each target exposes a vectorized ``log_density`` (unnormalized, leading
axis = batch) and a ``kind`` code.  Kinds >= 0 are implemented natively in
the compiled core; ``CallableTarget`` always runs on the Python path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mathutils import softplus

NORMAL_TRANSLATION = 0
DOUBLE_WELL = 1
LOGISTIC = 2
PYTHON_ONLY = -1


@dataclass(frozen=True, eq=False)
class NormalTranslationTarget:
    lam: float
    shift: float
    kind = NORMAL_TRANSLATION
    dim = 1

    def log_density(self, x):
        x = np.asarray(x, dtype=float)
        return -0.5 * (x[..., 0] - self.lam * self.shift) ** 2


def doublewell_u0(x):
    x = np.asarray(x, dtype=float)
    return (x[..., 0] + 2.0) ** 2 + 0.5 * x[..., 1] ** 2


def doublewell_u1(x):
    x = np.asarray(x, dtype=float)
    x1, x2 = x[..., 0], x[..., 1]
    return 0.1 * (
        ((x1 - 1.0) ** 2 - x2**2) ** 2
        + 10.0 * (x1**2 - 5.0) ** 2
        + (x1 + x2) ** 4
        + (x1 - x2) ** 4
    )


@dataclass(frozen=True, eq=False)
class DoubleWellTarget:
    lam: float
    kind = DOUBLE_WELL
    dim = 2

    def log_density(self, x):
        return -(1.0 - self.lam) * doublewell_u0(x) - self.lam * doublewell_u1(x)


@dataclass(frozen=True, eq=False)
class LogisticTarget:
    """Weighted logistic likelihood with up to two Gaussian factors.

    log density(beta) = gauss_weight * log N(beta; gauss_mean, P_g^{-1})
                      + prior_weight * log N(beta; prior_mean, P_p^{-1})
                      + sum_i w_i (y_i eta_i - log(1 + exp(eta_i))),
    eta_i = s_i d_i' beta, with P_g, P_p given by lower Cholesky factors of the
    precision matrices.  Additive constants are dropped.
    """

    design: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    scales: np.ndarray
    prior_mean: np.ndarray
    prior_prec_chol: np.ndarray
    prior_weight: float = 1.0
    gauss_mean: np.ndarray | None = None
    gauss_prec_chol: np.ndarray | None = None
    gauss_weight: float = 0.0
    kind = LOGISTIC

    @property
    def dim(self):
        return self.design.shape[1]

    def log_density(self, beta):
        beta = np.asarray(beta, dtype=float)
        eta = (beta @ self.design.T) * self.scales
        out = (self.weights * (self.y * eta - softplus(eta))).sum(axis=-1)
        if self.prior_weight != 0.0:
            z = (beta - self.prior_mean) @ self.prior_prec_chol
            out = out - 0.5 * self.prior_weight * np.sum(z * z, axis=-1)
        if self.gauss_weight != 0.0:
            z = (beta - self.gauss_mean) @ self.gauss_prec_chol
            out = out - 0.5 * self.gauss_weight * np.sum(z * z, axis=-1)
        return out

    def native_args(self):
        p = self.dim
        gm = self.gauss_mean if self.gauss_mean is not None else np.zeros(p)
        gl = self.gauss_prec_chol if self.gauss_prec_chol is not None else np.zeros((p, p))
        f = lambda a: np.ascontiguousarray(a, dtype=float)  # noqa: E731
        return (
            f(self.design), f(self.y), f(self.weights), f(self.scales),
            f(self.prior_mean), f(self.prior_prec_chol), float(self.prior_weight),
            f(gm), f(gl), float(self.gauss_weight),
        )


@dataclass(frozen=True, eq=False)
class CallableTarget:
    """Wraps an arbitrary vectorized log-density; Python backend only."""

    fn: object
    dim: int
    kind = PYTHON_ONLY

    def log_density(self, x):
        return self.fn(x)
