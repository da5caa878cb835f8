"""Pure-Python implementations of the hot kernels.

Same call signatures as the compiled ``ups._core``; selected by
:mod:`ups.backend` when the extension is unavailable or disabled.  Both
draw exactly one ``uint64`` seed from the caller's generator per call where
they need a private stream, so outer-stream consumption matches.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import log_ndtr

from .coupling import MAX_REJECTIONS
from .errors import NoMeetingError, NumericDomainError

PG_TRUNC = 0.64
_PI2_8 = np.pi**2 / 8.0


def _seed(rng) -> int:
    return int(rng.integers(0, 2**63, dtype=np.int64))


# --------------------------------------------------------------------------
# Polya-Gamma PG(1, c)


def _pg_coef(n: int, x: np.ndarray) -> np.ndarray:
    """n-th term of the alternating series for J*(1, 0), piecewise at PG_TRUNC."""
    kk = (n + 0.5) * np.pi
    out = np.empty_like(x)
    big = x > PG_TRUNC
    xb = x[big]
    out[big] = kk * np.exp(-0.5 * kk * kk * xb)
    xs = x[~big]
    out[~big] = np.exp(
        -1.5 * (np.log(0.5 * np.pi) + np.log(xs)) + np.log(kk) - 2.0 * (n + 0.5) ** 2 / xs
    )
    return out


def _mass_texpon(z: np.ndarray) -> np.ndarray:
    t = PG_TRUNC
    fz = _PI2_8 + 0.5 * z * z
    b = np.sqrt(1.0 / t) * (t * z - 1.0)
    a = -np.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = np.log(fz) + fz * t
    xb = x0 - z + log_ndtr(b)
    xa = x0 + z + log_ndtr(a)
    with np.errstate(over="ignore"):
        qdivp = 4.0 / np.pi * (np.exp(xb) + np.exp(xa))
    return 1.0 / (1.0 + qdivp)


def _rtigauss(z: np.ndarray, rng) -> np.ndarray:
    """Inverse-Gaussian IG(1/z, 1) truncated to (0, PG_TRUNC)."""
    t = PG_TRUNC
    out = np.empty_like(z)
    large_mu = z < 1.0 / t
    idx = np.flatnonzero(large_mu)
    for _ in range(MAX_REJECTIONS):
        if idx.size == 0:
            break
        e1 = rng.standard_exponential(idx.size)
        e2 = rng.standard_exponential(idx.size)
        bad = np.flatnonzero(e1 * e1 > 2.0 * e2 / t)
        while bad.size:
            e1[bad] = rng.standard_exponential(bad.size)
            e2[bad] = rng.standard_exponential(bad.size)
            bad = bad[e1[bad] * e1[bad] > 2.0 * e2[bad] / t]
        x = t / (1.0 + e1 * t) ** 2
        alpha = np.exp(-0.5 * z[idx] ** 2 * x)
        ok = rng.random(idx.size) <= alpha
        out[idx[ok]] = x[ok]
        idx = idx[~ok]
    else:
        raise NumericDomainError("truncated inverse-Gaussian sampler exceeded its cap")

    idx = np.flatnonzero(~large_mu)
    for _ in range(MAX_REJECTIONS):
        if idx.size == 0:
            break
        mu = 1.0 / z[idx]
        yy = rng.standard_normal(idx.size) ** 2
        mu_y = mu * yy
        x = mu + 0.5 * mu * mu_y - 0.5 * mu * np.sqrt(4.0 * mu_y + mu_y * mu_y)
        flip = rng.random(idx.size) > mu / (mu + x)
        x[flip] = mu[flip] ** 2 / x[flip]
        ok = x < t
        out[idx[ok]] = x[ok]
        idx = idx[~ok]
    else:
        raise NumericDomainError("truncated inverse-Gaussian sampler exceeded its cap")
    return out


def _pg_draw_with(c: np.ndarray, rng) -> np.ndarray:
    z = 0.5 * np.abs(np.asarray(c, dtype=float).ravel())
    fz = _PI2_8 + 0.5 * z * z
    mass = _mass_texpon(z)
    out = np.empty_like(z)
    todo = np.arange(z.size)
    for _ in range(MAX_REJECTIONS):
        if todo.size == 0:
            return out
        zt = z[todo]
        x = np.empty_like(zt)
        use_exp = rng.random(todo.size) < mass[todo]
        x[use_exp] = PG_TRUNC + rng.standard_exponential(int(use_exp.sum())) / fz[todo][use_exp]
        x[~use_exp] = _rtigauss(zt[~use_exp], rng)
        s = _pg_coef(0, x)
        y = rng.random(todo.size) * s
        accepted = np.zeros(todo.size, dtype=bool)
        active = np.arange(todo.size)
        n = 0
        while active.size:
            n += 1
            an = _pg_coef(n, x[active])
            if n % 2 == 1:
                s[active] -= an
                hit = y[active] <= s[active]
                accepted[active[hit]] = True
                active = active[~hit]
            else:
                s[active] += an
                active = active[y[active] <= s[active]]
        out[todo[accepted]] = 0.25 * x[accepted]
        todo = todo[~accepted]
    raise NumericDomainError("Polya-Gamma rejection loop exceeded its cap")


def pg_draw(c, rng) -> np.ndarray:
    """Exact PG(1, |c_i|) draws, one per entry of ``c``."""
    return _pg_draw_with(c, np.random.default_rng(_seed(rng)))


# --------------------------------------------------------------------------
# Random-walk Metropolis-Hastings for a fixed target


def _gauss_coupling(x, y, chol, reflect, rng):
    """Coupled proposals from N(x, S) and N(y, S); returns (px, py)."""
    xdot = rng.standard_normal(x.size)
    px = x + chol @ xdot
    z = solve_triangular(chol, x - y, lower=True)
    log_u = np.log(rng.random())
    # log phi(xdot + z) - log phi(xdot): density of px under the y-proposal
    # relative to the x-proposal
    log_ratio = -0.5 * float(z @ z) - float(xdot @ z)
    if log_u <= log_ratio:
        return px, px.copy()
    if reflect:
        e = z / np.sqrt(z @ z)
        ydot = xdot - 2.0 * float(e @ xdot) * e
        return px, y + chol @ ydot
    for _ in range(MAX_REJECTIONS):
        ydot = rng.standard_normal(x.size)
        # residual rejection: accept with prob 1 - min(1, p(Y)/q(Y))
        zy = ydot - z  # standardized residual of Y w.r.t. the x-proposal
        log_w = np.log(rng.random())
        if log_w - 0.5 * float(ydot @ ydot) > -0.5 * float(zy @ zy):
            return px, y + chol @ ydot
    raise NumericDomainError("maximal coupling rejection loop exceeded its cap")


def rwmh_step(target, x, lpx, chol, rng):
    prop = x + chol @ rng.standard_normal(x.size)
    lpp = float(target.log_density(prop))
    if np.log(rng.random()) < lpp - lpx:
        return prop, lpp
    return x, lpx


def rwmh_coupled_step(target, x, lpx, y, lpy, chol, reflect, rng):
    px, py = _gauss_coupling(x, y, chol, reflect, rng)
    lpx_prop = float(target.log_density(px))
    lpy_prop = lpx_prop if np.array_equal(px, py) else float(target.log_density(py))
    log_u = np.log(rng.random())
    if log_u < lpx_prop - lpx:
        x, lpx = px, lpx_prop
    if log_u < lpy_prop - lpy:
        y, lpy = py, lpy_prop
    return x, lpx, y, lpy


def _grow(buf, n):
    if n < buf.shape[0]:
        return buf
    new = np.empty((2 * buf.shape[0],) + buf.shape[1:])
    new[: buf.shape[0]] = buf
    return new


def rwmh_run(target, x0, y0, chol, reflect, m, max_iterations, rng):
    """Coupled RWMH run; returns (tau, xs, ys) as in ``unbiased.run_coupled``."""
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    chol = np.asarray(chol, dtype=float)
    d = x.size
    lpx = float(target.log_density(x))
    lpy = float(target.log_density(y))
    xs = np.empty((max(m, 16) + 2, d))
    ys = np.empty((max(m, 16) + 2, d))
    xs[0], ys[0] = x, y
    x, lpx = rwmh_step(target, x, lpx, chol, rng)
    xs[1] = x
    tau = 1 if np.array_equal(x, y) else 0
    n = 1
    while tau == 0 or n < max(tau, m):
        xs = _grow(xs, n + 1)
        if tau == 0:
            if n >= max_iterations:
                raise NoMeetingError(
                    f"chains did not meet within {max_iterations} iterations",
                    partial=(xs[: n + 1].copy(), ys[:n].copy()),
                )
            ys = _grow(ys, n)
            x, lpx, y, lpy = rwmh_coupled_step(target, x, lpx, y, lpy, chol, reflect, rng)
            xs[n + 1], ys[n] = x, y
            if np.array_equal(x, y):
                tau = n + 1
        else:
            x, lpx = rwmh_step(target, x, lpx, chol, rng)
            xs[n + 1] = x
        n += 1
    return tau, xs[: n + 1].copy(), ys[:tau].copy()


# --------------------------------------------------------------------------
# Polya-Gamma Gibbs sampler for logistic regression


def pgg_conditional(beta, design, scales, lin_term, prior_prec, seed):
    """Gaussian conditional of beta after drawing omega | beta.

    Returns (mean, lower Cholesky factor of the precision).
    """
    active = scales != 0.0
    d_act = design[active]
    s_act = scales[active]
    omega = _pg_draw_with(s_act * (d_act @ beta), np.random.default_rng(seed))
    prec = prior_prec + (d_act.T * (omega * s_act * s_act)) @ d_act
    chol = np.linalg.cholesky(prec)
    mean = cho_solve((chol, True), lin_term)
    return mean, chol


def _mvn_prec_draw(mean, chol, rng):
    return mean + solve_triangular(chol.T, rng.standard_normal(mean.size), lower=False)


def _mvn_prec_logpdf(x, mean, chol):
    z = chol.T @ (x - mean)
    return float(np.sum(np.log(np.diag(chol))) - 0.5 * z @ z)


def pgg_step(beta, design, scales, lin_term, prior_prec, rng):
    mean, chol = pgg_conditional(beta, design, scales, lin_term, prior_prec, _seed(rng))
    return _mvn_prec_draw(mean, chol, rng)


def pgg_coupled_step(beta_x, beta_y, design, scales, lin_term, prior_prec, rng):
    seed = _seed(rng)  # common random numbers for both omega draws
    mx, lx = pgg_conditional(beta_x, design, scales, lin_term, prior_prec, seed)
    my, ly = pgg_conditional(beta_y, design, scales, lin_term, prior_prec, seed)
    x = _mvn_prec_draw(mx, lx, rng)
    if np.log(rng.random()) + _mvn_prec_logpdf(x, mx, lx) <= _mvn_prec_logpdf(x, my, ly):
        return x, x.copy()
    for _ in range(MAX_REJECTIONS):
        y = _mvn_prec_draw(my, ly, rng)
        if np.log(rng.random()) + _mvn_prec_logpdf(y, my, ly) > _mvn_prec_logpdf(y, mx, lx):
            return x, y
    raise NumericDomainError("maximal coupling rejection loop exceeded its cap")


def pgg_run(design, scales, lin_term, prior_prec, x0, y0, m, max_iterations, rng):
    design = np.asarray(design, dtype=float)
    x = np.array(x0, dtype=float)
    y = np.array(y0, dtype=float)
    p = x.size
    xs = np.empty((max(m, 16) + 2, p))
    ys = np.empty((max(m, 16) + 2, p))
    xs[0], ys[0] = x, y
    x = pgg_step(x, design, scales, lin_term, prior_prec, rng)
    xs[1] = x
    tau = 1 if np.array_equal(x, y) else 0
    n = 1
    while tau == 0 or n < max(tau, m):
        xs = _grow(xs, n + 1)
        if tau == 0:
            if n >= max_iterations:
                raise NoMeetingError(
                    f"chains did not meet within {max_iterations} iterations",
                    partial=(xs[: n + 1].copy(), ys[:n].copy()),
                )
            ys = _grow(ys, n)
            x, y = pgg_coupled_step(x, y, design, scales, lin_term, prior_prec, rng)
            xs[n + 1], ys[n] = x, y
            if np.array_equal(x, y):
                tau = n + 1
        else:
            x = pgg_step(x, design, scales, lin_term, prior_prec, rng)
            xs[n + 1] = x
        n += 1
    return tau, xs[: n + 1].copy(), ys[:tau].copy()
