"""Couplings of pairs of distributions.

Both couplings return draws that coincide exactly (same array object
contents) on the event that they meet, which is what makes the coupled
chains of :mod:`ups.unbiased` faithful.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np
from scipy.linalg import solve_triangular

from .errors import NumericDomainError

MAX_REJECTIONS = 1_000_000
_LOG_2PI = np.log(2.0 * np.pi)


class SamplableDensity(Protocol):
    def sample(self, rng: np.random.Generator): ...

    def log_density(self, x) -> float: ...


@dataclass(frozen=True)
class CoupledDraw:
    x: np.ndarray
    y: np.ndarray
    met: bool


class MultivariateNormal:
    """N(mean, chol @ chol.T) with sampling and log-density."""

    def __init__(self, mean, chol):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        self.chol = np.atleast_2d(np.asarray(chol, dtype=float))
        diag = np.diag(self.chol)
        if not np.all(diag > 0):
            raise np.linalg.LinAlgError("Cholesky factor must have a positive diagonal")
        self._log_norm = -np.sum(np.log(diag)) - 0.5 * self.mean.size * _LOG_2PI

    def sample(self, rng):
        return self.mean + self.chol @ rng.standard_normal(self.mean.size)

    def log_density(self, x):
        z = solve_triangular(self.chol, np.asarray(x, dtype=float) - self.mean, lower=True)
        return self._log_norm - 0.5 * float(z @ z)


class Uniform:
    def __init__(self, low, high):
        self.low, self.high = float(low), float(high)

    def sample(self, rng):
        return np.array([rng.uniform(self.low, self.high)])

    def log_density(self, x):
        x = float(np.asarray(x).reshape(-1)[0])
        if self.low <= x <= self.high:
            return -np.log(self.high - self.low)
        return -np.inf


def _checked(value: float) -> float:
    if np.isnan(value) or value == np.inf:
        raise NumericDomainError(f"log-density evaluated to {value}")
    return value


def maximal_coupling(p: SamplableDensity, q: SamplableDensity, rng) -> CoupledDraw:
    """Draw (X, Y) with X ~ p, Y ~ q and P(X = Y) = 1 - TV(p, q).

    X is drawn from p and kept as Y with probability min(1, q(X)/p(X));
    otherwise Y is drawn from the residual (q - p)^+ by rejection.
    """
    x = np.asarray(p.sample(rng), dtype=float)
    lp_x = _checked(p.log_density(x))
    lq_x = _checked(q.log_density(x))
    if np.log(rng.random()) + lp_x <= lq_x:
        return CoupledDraw(x, x.copy(), True)
    for _ in range(MAX_REJECTIONS):
        y = np.asarray(q.sample(rng), dtype=float)
        lq_y = _checked(q.log_density(y))
        lp_y = _checked(p.log_density(y))
        if np.log(rng.random()) + lq_y > lp_y:
            return CoupledDraw(x, y, False)
    raise NumericDomainError("maximal coupling rejection loop exceeded its cap")


def reflection_maximal_normal(mu1, mu2, chol, rng) -> CoupledDraw:
    """Reflection-maximal coupling of N(mu1, S) and N(mu2, S), S = chol chol'.

    When the draws do not meet, the standardized residual of ``y`` is the
    reflection of that of ``x`` through the hyperplane orthogonal to
    ``chol^{-1}(mu1 - mu2)``.
    """
    mu1 = np.atleast_1d(np.asarray(mu1, dtype=float))
    mu2 = np.atleast_1d(np.asarray(mu2, dtype=float))
    chol = np.atleast_2d(np.asarray(chol, dtype=float))
    if np.any(np.diag(chol) <= 0):
        raise np.linalg.LinAlgError("singular Cholesky factor")
    z = solve_triangular(chol, mu1 - mu2, lower=True)
    xdot = rng.standard_normal(mu1.size)
    x = mu1 + chol @ xdot
    # log phi(xdot + z) - log phi(xdot)
    log_ratio = -0.5 * float(z @ z) - float(xdot @ z)
    if np.log(rng.random()) <= log_ratio:
        return CoupledDraw(x, x.copy(), True)
    e = z / np.sqrt(z @ z)
    ydot = xdot - 2.0 * float(e @ xdot) * e
    return CoupledDraw(x, mu2 + chol @ ydot, False)
