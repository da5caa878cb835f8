"""Independent reference computations used by several test modules."""
import numpy as np
from scipy import stats
from scipy.special import logsumexp


def logistic_log_post(model, betas):
    eta = betas @ model.design.T
    ll = np.sum(model.y * eta - np.logaddexp(0.0, eta), axis=-1)
    return ll + stats.multivariate_normal(model.prior_mean, model.prior_cov).logpdf(betas)


def grid_2d(model, center, cov, half_width=12.0, n=401):
    """Tensor grid over center +- half_width sd; returns (points, log-weights of the cells)."""
    sd = np.sqrt(np.diag(cov))
    axes = [np.linspace(c - half_width * s, c + half_width * s, n) for c, s in zip(center, sd)]
    g0, g1 = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g0.ravel(), g1.ravel()], axis=1)
    cell = np.log((axes[0][1] - axes[0][0]) * (axes[1][1] - axes[1][0]))
    return pts, cell


def logistic_2d_moments(model, center, cov):
    """Posterior mean and log evidence of a two-parameter logistic model by quadrature."""
    pts, cell = grid_2d(model, center, cov)
    lp = logistic_log_post(model, pts)
    log_z = logsumexp(lp) + cell
    w = np.exp(lp - lp.max())
    w /= w.sum()
    return w @ pts, log_z


def batch_means_se(x, n_batches=50):
    x = np.asarray(x)
    b = np.array_split(x, n_batches)
    means = np.array([bb.mean(axis=0) for bb in b])
    return means.std(axis=0, ddof=1) / np.sqrt(n_batches)


def linear_loo_logscore(model):
    """Exact leave-one-out -log p(y_i | y_-i) averaged over i, flat prior
    p(beta, s2) ∝ 1/s2: the predictive is Student-t with n_T - p dof."""
    n, p = model.design.shape
    vals = []
    for i in range(n):
        keep = np.arange(n) != i
        d, y = model.design[keep], model.y[keep]
        gram_inv = np.linalg.inv(d.T @ d)
        beta = gram_inv @ d.T @ y
        dof = d.shape[0] - p
        s2 = np.sum((y - d @ beta) ** 2) / dof
        x = model.design[i]
        scale = np.sqrt(s2 * (1.0 + x @ gram_inv @ x))
        vals.append(-stats.t.logpdf(model.y[i], dof, loc=x @ beta, scale=scale))
    return float(np.mean(vals))


def linear_loo_mse(model):
    """Exact leave-one-out E[n_V s2 + (d_V' beta - y_V)^2] under the training posterior."""
    n, p = model.design.shape
    vals = []
    for i in range(n):
        keep = np.arange(n) != i
        d, y = model.design[keep], model.y[keep]
        gram_inv = np.linalg.inv(d.T @ d)
        beta = gram_inv @ d.T @ y
        rss = np.sum((y - d @ beta) ** 2)
        n_t = d.shape[0]
        e_s2 = rss / (n_t - p - 2)
        x = model.design[i]
        vals.append(e_s2 + (x @ beta - model.y[i]) ** 2 + e_s2 * (x @ gram_inv @ x))
    return float(np.mean(vals))


def doublewell_log_ratio(half_width=6.0, n=1201):
    """log(Z_1 / Z_0) for the double-well potentials by 2-D trapezoid quadrature."""
    from scipy.integrate import trapezoid

    ax = np.linspace(-half_width, half_width, n)
    x1, x2 = np.meshgrid(ax, ax, indexing="ij")
    u0 = (x1 + 2.0) ** 2 + 0.5 * x2**2
    u1 = 0.1 * (((x1 - 1.0) ** 2 - x2**2) ** 2 + 10.0 * (x1**2 - 5.0) ** 2 + (x1 + x2) ** 4 + (x1 - x2) ** 4)

    def log_z(u):
        shift = u.min()
        return np.log(trapezoid(trapezoid(np.exp(-(u - shift)), ax, axis=1), ax)) - shift

    return float(log_z(u1) - log_z(u0))


def _logistic_mode(model):
    from scipy import optimize

    prec = np.linalg.inv(model.prior_cov)

    def neg(b):
        eta = model.design @ b
        r = b - model.prior_mean
        val = -np.sum(model.y * eta - np.logaddexp(0.0, eta)) + 0.5 * r @ prec @ r
        grad = -model.design.T @ (model.y - expit_(eta)) + prec @ r
        return val, grad

    res = optimize.minimize(neg, np.zeros(model.design.shape[1]), jac=True, method="BFGS",
                            options={"gtol": 1e-9, "maxiter": 10_000})
    b = res.x
    w = expit_(model.design @ b)
    hess = model.design.T @ (model.design * (w * (1 - w))[:, None]) + prec
    return b, np.linalg.inv(hess)


def expit_(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def logistic_is_draws(model, n_draws, seed, df=5.0):
    """Student-t importance draws around the posterior mode: (betas, log weights)."""
    mode, cov = _logistic_mode(model)
    prop = stats.multivariate_t(mode, cov, df=df, seed=seed)
    betas = prop.rvs(n_draws)
    lp = np.concatenate([logistic_log_post(model, b) for b in np.array_split(betas, max(1, n_draws // 10_000))])
    return betas, lp - prop.logpdf(betas)


def logistic_log_evidence(model, n_draws=400_000, seed=7):
    betas, lw = logistic_is_draws(model, n_draws, seed)
    return float(logsumexp(lw) - np.log(n_draws))


def logistic_loo_log_predictive(model, n_draws=100_000, seed=8, chunk=100):
    """mean_i log p(y_i | y_-i) = -mean_i log E_post[1 / p(y_i | beta)]."""
    betas, lw = logistic_is_draws(model, n_draws, seed)
    lw = lw - logsumexp(lw)
    out = np.empty(model.n)
    for start in range(0, model.n, chunk):
        rows = slice(start, start + chunk)
        eta = betas @ model.design[rows].T
        log_p = model.y[rows] * eta - np.logaddexp(0.0, eta)
        out[rows] = -logsumexp(lw[:, None] - log_p, axis=0)
    return float(out.mean())


def logistic_2d_loo(model):
    """Per-index log p(y_i | y_-i) for a two-parameter model by quadrature."""
    _, cov = _logistic_mode(model)
    center = _logistic_mode(model)[0]
    pts, _ = grid_2d(model, center, 4 * cov, half_width=10.0)
    eta = pts @ model.design.T
    log_p = model.y * eta - np.logaddexp(0.0, eta)
    prior = stats.multivariate_normal(model.prior_mean, model.prior_cov).logpdf(pts)
    full = log_p.sum(axis=1) + prior
    log_z = logsumexp(full)
    return np.array([log_z - logsumexp(full - log_p[:, i]) for i in range(model.n)])


def linear_split_scores(model, n_train, n_splits, seed):
    """Monte Carlo over uniform splits of the exact per-split MSE-CV and
    -log p(V | T) under the flat prior p(beta, s2) ∝ 1/s2."""
    rng = np.random.default_rng(seed)
    n, p = model.design.shape
    mse, logscore = np.empty(n_splits), np.empty(n_splits)
    for s in range(n_splits):
        perm = rng.permutation(n)
        t, v = perm[:n_train], perm[n_train:]
        d, y = model.design[t], model.y[t]
        gram_inv = np.linalg.inv(d.T @ d)
        beta = gram_inv @ d.T @ y
        rss = np.sum((y - d @ beta) ** 2)
        dof = n_train - p
        dv, yv = model.design[v], model.y[v]
        resid = yv - dv @ beta
        lever = dv @ gram_inv @ dv.T
        e_s2 = rss / (dof - 2)
        mse[s] = v.size * e_s2 + resid @ resid + e_s2 * np.trace(lever)
        shape = rss / dof * (np.eye(v.size) + lever)
        logscore[s] = -stats.multivariate_t(dv @ beta, shape, df=dof).logpdf(yv)
    return mse, logscore
