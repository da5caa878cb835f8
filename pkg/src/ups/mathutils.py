import numpy as np
from scipy.special import expit

LOG_2PI = float(np.log(2.0 * np.pi))


def softplus(z):
    """log(1 + exp(z)) without overflow."""
    z = np.asarray(z, dtype=float)
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def softplus_grad(z):
    return expit(z)


def type7_quantile(samples, q: float) -> float:
    return float(np.quantile(np.asarray(samples, dtype=float), q, method="linear"))


def chol_lower(a):
    return np.linalg.cholesky(np.asarray(a, dtype=float))
