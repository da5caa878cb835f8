"""The Polya-Gamma PG(1, c) distribution: log-density and exact sampling.

The density is the exponentially tilted law of J*(1, 0) / 4:

    pg(x; c) = cosh(c/2) exp(-c^2 x / 2) sum_k (-1)^k (2k+1) / sqrt(2 pi x^3)
               exp(-(2k+1)^2 / (8x)).

That series converges fast for small x but cancels badly for large x, so
beyond ``SWITCH`` the log-density uses the equivalent theta-function form

    4 sum_k (-1)^k pi (k + 1/2) exp(-2 pi^2 (k + 1/2)^2 x),

which converges fast there.  Both are truncated once a term drops below
``1e-15`` of the running partial sum.
"""
from __future__ import annotations

import numpy as np

from . import backend
from .errors import NumericDomainError

SERIES_TOL = 1e-15
MAX_TERMS = 10_000
# 0.64 / 4: the sampler's truncation point on the PG scale
SWITCH = 0.16


def _log_cosh(a):
    a = np.abs(a)
    return a + np.log1p(np.exp(-2.0 * a)) - np.log(2.0)


def _series_small(x: float) -> float:
    total = 0.0
    norm = 1.0 / np.sqrt(2.0 * np.pi * x**3)
    for k in range(MAX_TERMS):
        term = (2 * k + 1) * norm * np.exp(-((2 * k + 1) ** 2) / (8.0 * x))
        total += term if k % 2 == 0 else -term
        if term < SERIES_TOL * abs(total):
            break
    return total


def _log_series_large(x: float) -> float:
    # factor out the leading exponential so the log stays finite for big x
    lead = -2.0 * (0.5 * np.pi) ** 2 * x
    total = 0.0
    for k in range(MAX_TERMS):
        a = np.pi * (k + 0.5)
        term = 4.0 * a * np.exp(-2.0 * a * a * x - lead)
        total += term if k % 2 == 0 else -term
        if term < SERIES_TOL * abs(total):
            break
    return lead + np.log(total)


def pg_log_density(x, c=0.0):
    """log pg(x; c) for x > 0 and real c (only |c| matters)."""
    xa = np.asarray(x, dtype=float)
    if np.any(~(xa > 0)):
        raise NumericDomainError("PG density is defined for x > 0 only")
    c = np.abs(np.broadcast_to(np.asarray(c, dtype=float), xa.shape))
    flat_x, flat_c = xa.ravel(), c.ravel()
    out = np.empty(flat_x.size)
    for i, (xi, ci) in enumerate(zip(flat_x, flat_c)):
        if xi <= SWITCH:
            s = _series_small(xi)
            base = np.log(s) if s > 0 else -np.inf
        else:
            base = _log_series_large(xi)
        out[i] = _log_cosh(0.5 * ci) - 0.5 * ci * ci * xi + base
    if xa.ndim == 0:
        return float(out[0])
    return out.reshape(xa.shape)


def pg_density(x, c=0.0):
    return np.exp(pg_log_density(x, c))


def pg_sample(c, rng, size=None):
    """Exact PG(1, |c|) draws.

    ``c`` may be a scalar or an array; with ``size`` a scalar ``c`` is
    broadcast.  Returns a float for scalar input without ``size``.
    """
    carr = np.asarray(c, dtype=float)
    if not np.all(np.isfinite(carr)):
        raise NumericDomainError("PG parameter must be finite")
    if size is not None:
        carr = np.broadcast_to(carr, size)
    draws = backend.pg_draw(np.ascontiguousarray(carr.ravel()), rng)
    if carr.ndim == 0:
        return float(draws[0])
    return draws.reshape(carr.shape)


def pg_mean(c):
    """E[PG(1, c)] = tanh(c/2) / (2c), with the c -> 0 limit 1/4."""
    c = np.abs(np.asarray(c, dtype=float))
    small = c < 1e-6
    safe = np.where(small, 1.0, c)
    return np.where(small, 0.25 - c * c / 48.0, np.tanh(0.5 * safe) / (2.0 * safe))
