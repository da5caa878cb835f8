# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: Polya-Gamma draws, coupled PGG and coupled RWMH runs.

Mirrors ``ups._pycore`` call for call.  Randomness comes from a private
xoshiro256** stream seeded with one uint64 drawn from the caller's numpy
Generator, so results are reproducible given that generator.
"""
import numpy as np

from libc.math cimport M_PI, M_SQRT1_2, erfc, exp, fabs, log, log1p, sqrt
from libc.stdint cimport uint64_t
from libc.string cimport memcmp, memcpy

from .errors import NoMeetingError, NumericDomainError

cdef double TRUNC = 0.64
cdef long MAX_REJECTIONS = 1000000


# ---------------------------------------------------------------------------
# RNG

cdef struct Rng:
    uint64_t s0
    uint64_t s1
    uint64_t s2
    uint64_t s3
    int has_gauss
    double gauss


cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _next(Rng* r) noexcept nogil:
    cdef uint64_t result = _rotl(r.s1 * 5, 7) * 9
    cdef uint64_t t = r.s1 << 17
    r.s2 ^= r.s0
    r.s3 ^= r.s1
    r.s1 ^= r.s2
    r.s0 ^= r.s3
    r.s2 ^= t
    r.s3 = _rotl(r.s3, 45)
    return result


cdef inline uint64_t _splitmix(uint64_t* state) noexcept nogil:
    state[0] += 0x9E3779B97F4A7C15ULL
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef void _seed(Rng* r, uint64_t seed) noexcept nogil:
    cdef uint64_t st = seed
    r.s0 = _splitmix(&st)
    r.s1 = _splitmix(&st)
    r.s2 = _splitmix(&st)
    r.s3 = _splitmix(&st)
    r.has_gauss = 0
    r.gauss = 0.0


cdef inline double _unif(Rng* r) noexcept nogil:
    # open interval (0, 1)
    return ((_next(r) >> 11) + 0.5) * (1.0 / 9007199254740992.0)


cdef inline double _expo(Rng* r) noexcept nogil:
    return -log(_unif(r))


cdef double _normal(Rng* r) noexcept nogil:
    cdef double u, v, s, f
    if r.has_gauss:
        r.has_gauss = 0
        return r.gauss
    while True:
        u = 2.0 * _unif(r) - 1.0
        v = 2.0 * _unif(r) - 1.0
        s = u * u + v * v
        if 0.0 < s < 1.0:
            break
    f = sqrt(-2.0 * log(s) / s)
    r.gauss = v * f
    r.has_gauss = 1
    return u * f


cdef uint64_t _seed_from(rng):
    return <uint64_t> int(rng.integers(0, 2**63, dtype=np.int64))


# ---------------------------------------------------------------------------
# Polya-Gamma PG(1, c)

cdef inline double _log_ndtr(double x) noexcept nogil:
    return log(0.5 * erfc(-x * M_SQRT1_2))


cdef inline double _pg_coef(int n, double x) noexcept nogil:
    cdef double kk = (n + 0.5) * M_PI
    if x > TRUNC:
        return kk * exp(-0.5 * kk * kk * x)
    return exp(-1.5 * (log(0.5 * M_PI) + log(x)) + log(kk) - 2.0 * (n + 0.5) * (n + 0.5) / x)


cdef double _mass_texpon(double z) noexcept nogil:
    cdef double t = TRUNC
    cdef double fz = 0.125 * M_PI * M_PI + 0.5 * z * z
    cdef double b = sqrt(1.0 / t) * (t * z - 1.0)
    cdef double a = -sqrt(1.0 / t) * (t * z + 1.0)
    cdef double x0 = log(fz) + fz * t
    cdef double xb = x0 - z + _log_ndtr(b)
    cdef double xa = x0 + z + _log_ndtr(a)
    cdef double qdivp = 4.0 / M_PI * (exp(xb) + exp(xa))
    return 1.0 / (1.0 + qdivp)


cdef double _rtigauss(double z, Rng* r) noexcept nogil:
    cdef double t = TRUNC
    cdef double x = t + 1.0
    cdef double e1, e2, alpha, mu, yy, mu_y
    cdef long it
    if z < 1.0 / t:
        for it in range(MAX_REJECTIONS):
            e1 = _expo(r)
            e2 = _expo(r)
            while e1 * e1 > 2.0 * e2 / t:
                e1 = _expo(r)
                e2 = _expo(r)
            x = t / ((1.0 + e1 * t) * (1.0 + e1 * t))
            alpha = exp(-0.5 * z * z * x)
            if _unif(r) <= alpha:
                return x
        return -1.0
    mu = 1.0 / z
    for it in range(MAX_REJECTIONS):
        yy = _normal(r)
        yy = yy * yy
        mu_y = mu * yy
        x = mu + 0.5 * mu * mu_y - 0.5 * mu * sqrt(4.0 * mu_y + mu_y * mu_y)
        if _unif(r) > mu / (mu + x):
            x = mu * mu / x
        if x < t:
            return x
    return -1.0


cdef double _pg_one(double c, Rng* r) noexcept nogil:
    """One PG(1, c) draw; returns -1 if a rejection cap was hit."""
    cdef double z = 0.5 * fabs(c)
    cdef double fz = 0.125 * M_PI * M_PI + 0.5 * z * z
    cdef double mass = _mass_texpon(z)
    cdef double x, s, y
    cdef int n
    cdef long it
    for it in range(MAX_REJECTIONS):
        if _unif(r) < mass:
            x = TRUNC + _expo(r) / fz
        else:
            x = _rtigauss(z, r)
            if x < 0.0:
                return -1.0
        s = _pg_coef(0, x)
        y = _unif(r) * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _pg_coef(n, x)
                if y <= s:
                    return 0.25 * x
            else:
                s += _pg_coef(n, x)
                if y > s:
                    break
    return -1.0


def pg_draw(c, rng):
    """Exact PG(1, |c_i|) draws, one per entry of ``c``."""
    cdef double[::1] cv = np.ascontiguousarray(np.ravel(c), dtype=np.float64)
    out = np.empty(cv.shape[0])
    cdef double[::1] ov = out
    cdef Rng r
    cdef Py_ssize_t i
    cdef double v
    _seed(&r, _seed_from(rng))
    for i in range(cv.shape[0]):
        v = _pg_one(cv[i], &r)
        if v < 0.0:
            raise NumericDomainError("Polya-Gamma rejection loop exceeded its cap")
        ov[i] = v
    return out


# ---------------------------------------------------------------------------
# small dense linear algebra (row-major, lower-triangular factors)

cdef int _chol(double* a, int p) noexcept nogil:
    cdef int i, j, k
    cdef double s
    for j in range(p):
        s = a[j * p + j]
        for k in range(j):
            s -= a[j * p + k] * a[j * p + k]
        if s <= 0.0:
            return -1
        a[j * p + j] = sqrt(s)
        for i in range(j + 1, p):
            s = a[i * p + j]
            for k in range(j):
                s -= a[i * p + k] * a[j * p + k]
            a[i * p + j] = s / a[j * p + j]
        for i in range(j):
            a[i * p + j] = 0.0
    return 0


cdef void _solve_lower(const double* l, double* b, int p) noexcept nogil:
    cdef int i, k
    cdef double s
    for i in range(p):
        s = b[i]
        for k in range(i):
            s -= l[i * p + k] * b[k]
        b[i] = s / l[i * p + i]


cdef void _solve_lower_t(const double* l, double* b, int p) noexcept nogil:
    # solves L' x = b
    cdef int i, k
    cdef double s
    for i in range(p - 1, -1, -1):
        s = b[i]
        for k in range(i + 1, p):
            s -= l[k * p + i] * b[k]
        b[i] = s / l[i * p + i]


cdef double _quad_lt(const double* l, const double* diff, int p) noexcept nogil:
    # || L' diff ||^2
    cdef int i, j
    cdef double u, out = 0.0
    for j in range(p):
        u = 0.0
        for i in range(j, p):
            u += l[i * p + j] * diff[i]
        out += u * u
    return out


cdef double _logdet_half(const double* l, int p) noexcept nogil:
    cdef int i
    cdef double s = 0.0
    for i in range(p):
        s += log(l[i * p + i])
    return s


cdef inline double _softplus(double z) noexcept nogil:
    if z > 0.0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


# ---------------------------------------------------------------------------
# growable trajectory buffers

cdef class _Trace:
    cdef public object arr
    cdef double[:, ::1] view
    cdef int d

    def __init__(self, Py_ssize_t capacity, int d):
        self.d = d
        self.arr = np.empty((max(capacity, 16), d))
        self.view = self.arr

    cdef void put(self, Py_ssize_t n, const double* x):
        cdef Py_ssize_t cap = self.view.shape[0]
        if n >= cap:
            new = np.empty((2 * cap if 2 * cap > n else n + 1, self.d))
            new[:cap] = self.arr
            self.arr = new
            self.view = new
        memcpy(&self.view[n, 0], x, self.d * sizeof(double))

    def take(self, Py_ssize_t n):
        return self.arr[:n].copy()


# ---------------------------------------------------------------------------
# Random-walk Metropolis-Hastings targets

cdef class _Target:
    cdef int kind
    cdef int d
    cdef double lam
    cdef double shift
    cdef double[:, ::1] design
    cdef double[::1] y
    cdef double[::1] w
    cdef double[::1] s
    cdef double[::1] prior_mean
    cdef double[:, ::1] prior_chol
    cdef double prior_weight
    cdef double[::1] gauss_mean
    cdef double[:, ::1] gauss_chol
    cdef double gauss_weight
    cdef double[::1] work

    def __init__(self, target):
        self.kind = target.kind
        self.d = target.dim
        if self.kind == 0:
            self.lam = target.lam
            self.shift = target.shift
        elif self.kind == 1:
            self.lam = target.lam
        elif self.kind == 2:
            (self.design, self.y, self.w, self.s, self.prior_mean, self.prior_chol,
             self.prior_weight, self.gauss_mean, self.gauss_chol,
             self.gauss_weight) = target.native_args()
            self.work = np.empty(self.d)
        else:
            raise TypeError("target has no native implementation")

    cdef double logpdf(self, const double* x) noexcept:
        cdef double x1, x2, u0, u1, a, eta, out
        cdef int i, j, n, p
        if self.kind == 0:
            a = x[0] - self.lam * self.shift
            return -0.5 * a * a
        if self.kind == 1:
            x1 = x[0]
            x2 = x[1]
            u0 = (x1 + 2.0) * (x1 + 2.0) + 0.5 * x2 * x2
            a = (x1 - 1.0) * (x1 - 1.0) - x2 * x2
            u1 = 0.1 * (a * a + 10.0 * (x1 * x1 - 5.0) * (x1 * x1 - 5.0)
                        + (x1 + x2) ** 4 + (x1 - x2) ** 4)
            return -(1.0 - self.lam) * u0 - self.lam * u1
        n = self.design.shape[0]
        p = self.d
        out = 0.0
        for i in range(n):
            if self.w[i] == 0.0:
                continue
            eta = 0.0
            for j in range(p):
                eta += self.design[i, j] * x[j]
            eta *= self.s[i]
            out += self.w[i] * (self.y[i] * eta - _softplus(eta))
        if self.prior_weight != 0.0:
            for j in range(p):
                self.work[j] = x[j] - self.prior_mean[j]
            out -= 0.5 * self.prior_weight * _quad_lt(&self.prior_chol[0, 0], &self.work[0], p)
        if self.gauss_weight != 0.0:
            for j in range(p):
                self.work[j] = x[j] - self.gauss_mean[j]
            out -= 0.5 * self.gauss_weight * _quad_lt(&self.gauss_chol[0, 0], &self.work[0], p)
        return out


cdef void _rw_propose(const double* x, const double* l, double* noise, double* out, int d, Rng* r) noexcept nogil:
    cdef int i, k
    for i in range(d):
        noise[i] = _normal(r)
    for i in range(d):
        out[i] = x[i]
        for k in range(i + 1):
            out[i] += l[i * d + k] * noise[k]


cdef int _gauss_coupling(const double* x, const double* y, const double* l, bint reflect,
                         double* px, double* py, double* xdot, double* z, double* ydot,
                         int d, Rng* r) noexcept nogil:
    """Coupled proposals from N(x, S), N(y, S); returns 1 if they coincide."""
    cdef int i, k
    cdef double zz = 0.0, xz = 0.0, ez, nrm, yy, zy2
    cdef long it
    _rw_propose(x, l, xdot, px, d, r)
    for i in range(d):
        z[i] = x[i] - y[i]
    _solve_lower(l, z, d)
    for i in range(d):
        zz += z[i] * z[i]
        xz += xdot[i] * z[i]
    if log(_unif(r)) <= -0.5 * zz - xz:
        memcpy(py, px, d * sizeof(double))
        return 1
    if reflect:
        nrm = sqrt(zz)
        ez = xz / nrm
        for i in range(d):
            ydot[i] = xdot[i] - 2.0 * ez * z[i] / nrm
    else:
        for it in range(MAX_REJECTIONS):
            yy = 0.0
            zy2 = 0.0
            for i in range(d):
                ydot[i] = _normal(r)
                yy += ydot[i] * ydot[i]
                zy2 += (ydot[i] - z[i]) * (ydot[i] - z[i])
            if log(_unif(r)) - 0.5 * yy > -0.5 * zy2:
                break
        else:
            return -1
    for i in range(d):
        py[i] = y[i]
        for k in range(i + 1):
            py[i] += l[i * d + k] * ydot[k]
    return 0


def rwmh_run(target, x0, y0, chol, bint reflect, long m, long max_iterations, rng):
    """Coupled RWMH run; returns (tau, xs, ys) as ``_pycore.rwmh_run``."""
    cdef _Target tgt = _Target(target)
    cdef int d = tgt.d
    cdef double[::1] x = np.array(x0, dtype=np.float64).ravel()
    cdef double[::1] y = np.array(y0, dtype=np.float64).ravel()
    cdef double[:, ::1] l = np.ascontiguousarray(chol, dtype=np.float64).reshape(d, d)
    cdef double[::1] px = np.empty(d), py = np.empty(d), b1 = np.empty(d)
    cdef double[::1] b2 = np.empty(d), b3 = np.empty(d)
    cdef _Trace xs = _Trace(m + 2, d), ys = _Trace(m + 2, d)
    cdef double lpx, lpy, lpp, lpq, log_u
    cdef long n, tau = 0
    cdef int met
    cdef Rng r
    _seed(&r, _seed_from(rng))

    lpx = tgt.logpdf(&x[0])
    lpy = tgt.logpdf(&y[0])
    xs.put(0, &x[0])
    ys.put(0, &y[0])
    _rw_propose(&x[0], &l[0, 0], &b1[0], &px[0], d, &r)
    lpp = tgt.logpdf(&px[0])
    if log(_unif(&r)) < lpp - lpx:
        memcpy(&x[0], &px[0], d * sizeof(double))
        lpx = lpp
    xs.put(1, &x[0])
    if memcmp(&x[0], &y[0], d * sizeof(double)) == 0:
        tau = 1
    n = 1
    while tau == 0 or n < (tau if tau > m else m):
        if tau == 0:
            if n >= max_iterations:
                raise NoMeetingError(
                    f"chains did not meet within {max_iterations} iterations",
                    partial=(xs.take(n + 1), ys.take(n)),
                )
            met = _gauss_coupling(&x[0], &y[0], &l[0, 0], reflect, &px[0], &py[0],
                                  &b1[0], &b2[0], &b3[0], d, &r)
            if met < 0:
                raise NumericDomainError("maximal coupling rejection loop exceeded its cap")
            lpp = tgt.logpdf(&px[0])
            lpq = lpp if met == 1 else tgt.logpdf(&py[0])
            log_u = log(_unif(&r))
            if log_u < lpp - lpx:
                memcpy(&x[0], &px[0], d * sizeof(double))
                lpx = lpp
            if log_u < lpq - lpy:
                memcpy(&y[0], &py[0], d * sizeof(double))
                lpy = lpq
            xs.put(n + 1, &x[0])
            ys.put(n, &y[0])
            if memcmp(&x[0], &y[0], d * sizeof(double)) == 0:
                tau = n + 1
        else:
            _rw_propose(&x[0], &l[0, 0], &b1[0], &px[0], d, &r)
            lpp = tgt.logpdf(&px[0])
            if log(_unif(&r)) < lpp - lpx:
                memcpy(&x[0], &px[0], d * sizeof(double))
                lpx = lpp
            xs.put(n + 1, &x[0])
        n += 1
    return tau, xs.take(n + 1), ys.take(tau)


# ---------------------------------------------------------------------------
# Polya-Gamma Gibbs sampler

cdef class _Pgg:
    cdef double[:, ::1] design
    cdef double[::1] scales
    cdef double[::1] lin
    cdef double[:, ::1] prior_prec
    cdef int n
    cdef int p

    def __init__(self, design, scales, lin_term, prior_prec):
        self.design = np.ascontiguousarray(design, dtype=np.float64)
        self.scales = np.ascontiguousarray(scales, dtype=np.float64)
        self.lin = np.ascontiguousarray(lin_term, dtype=np.float64)
        self.prior_prec = np.ascontiguousarray(prior_prec, dtype=np.float64)
        self.n = self.design.shape[0]
        self.p = self.design.shape[1]

    cdef int conditional(self, const double* beta, double* mean, double* l, Rng* r) noexcept nogil:
        """Draw omega | beta and form N(mean, (L L')^{-1}); 0 on success."""
        cdef int i, a, b, p = self.p
        cdef double eta, w, si
        memcpy(l, &self.prior_prec[0, 0], p * p * sizeof(double))
        for i in range(self.n):
            si = self.scales[i]
            if si == 0.0:
                continue
            eta = 0.0
            for a in range(p):
                eta += self.design[i, a] * beta[a]
            w = _pg_one(si * eta, r)
            if w < 0.0:
                return -2
            w *= si * si
            for a in range(p):
                for b in range(a + 1):
                    l[a * p + b] += w * self.design[i, a] * self.design[i, b]
        if _chol(l, p) != 0:
            return -1
        memcpy(mean, &self.lin[0], p * sizeof(double))
        _solve_lower(l, mean, p)
        _solve_lower_t(l, mean, p)
        return 0


cdef void _mvn_draw(const double* mean, const double* l, double* out, int p, Rng* r) noexcept nogil:
    cdef int i
    for i in range(p):
        out[i] = _normal(r)
    _solve_lower_t(l, out, p)
    for i in range(p):
        out[i] += mean[i]


cdef double _mvn_logpdf(const double* x, const double* mean, const double* l, double* work, int p) noexcept nogil:
    cdef int i
    for i in range(p):
        work[i] = x[i] - mean[i]
    return _logdet_half(l, p) - 0.5 * _quad_lt(l, work, p)


cdef _raise_status(int status):
    if status == -1:
        raise np.linalg.LinAlgError("conditional precision is not positive definite")
    raise NumericDomainError("Polya-Gamma rejection loop exceeded its cap")


def pgg_run(design, scales, lin_term, prior_prec, x0, y0, long m, long max_iterations, rng):
    """Coupled PGG run; returns (tau, xs, ys) as ``_pycore.pgg_run``."""
    cdef _Pgg k = _Pgg(design, scales, lin_term, prior_prec)
    cdef int p = k.p
    cdef double[::1] x = np.array(x0, dtype=np.float64).ravel()
    cdef double[::1] y = np.array(y0, dtype=np.float64).ravel()
    cdef double[::1] mx = np.empty(p), my = np.empty(p), work = np.empty(p)
    cdef double[::1] lx = np.empty(p * p), ly = np.empty(p * p)
    cdef _Trace xs = _Trace(m + 2, p), ys = _Trace(m + 2, p)
    cdef long n, tau = 0, it
    cdef int status
    cdef uint64_t s
    cdef bint coupled
    cdef Rng r, pr
    _seed(&r, _seed_from(rng))

    xs.put(0, &x[0])
    ys.put(0, &y[0])
    _seed(&pr, _next(&r))
    status = k.conditional(&x[0], &mx[0], &lx[0], &pr)
    if status != 0:
        _raise_status(status)
    _mvn_draw(&mx[0], &lx[0], &x[0], p, &r)
    xs.put(1, &x[0])
    if memcmp(&x[0], &y[0], p * sizeof(double)) == 0:
        tau = 1
    n = 1
    while tau == 0 or n < (tau if tau > m else m):
        if tau == 0:
            if n >= max_iterations:
                raise NoMeetingError(
                    f"chains did not meet within {max_iterations} iterations",
                    partial=(xs.take(n + 1), ys.take(n)),
                )
            s = _next(&r)  # common random numbers for both omega draws
            _seed(&pr, s)
            status = k.conditional(&x[0], &mx[0], &lx[0], &pr)
            if status != 0:
                _raise_status(status)
            _seed(&pr, s)
            status = k.conditional(&y[0], &my[0], &ly[0], &pr)
            if status != 0:
                _raise_status(status)
            _mvn_draw(&mx[0], &lx[0], &x[0], p, &r)
            if log(_unif(&r)) + _mvn_logpdf(&x[0], &mx[0], &lx[0], &work[0], p) <= \
                    _mvn_logpdf(&x[0], &my[0], &ly[0], &work[0], p):
                memcpy(&y[0], &x[0], p * sizeof(double))
            else:
                for it in range(MAX_REJECTIONS):
                    _mvn_draw(&my[0], &ly[0], &y[0], p, &r)
                    if log(_unif(&r)) + _mvn_logpdf(&y[0], &my[0], &ly[0], &work[0], p) > \
                            _mvn_logpdf(&y[0], &mx[0], &lx[0], &work[0], p):
                        break
                else:
                    raise NumericDomainError("maximal coupling rejection loop exceeded its cap")
            xs.put(n + 1, &x[0])
            ys.put(n, &y[0])
            if memcmp(&x[0], &y[0], p * sizeof(double)) == 0:
                tau = n + 1
        else:
            _seed(&pr, _next(&r))
            status = k.conditional(&x[0], &mx[0], &lx[0], &pr)
            if status != 0:
                _raise_status(status)
            _mvn_draw(&mx[0], &lx[0], &x[0], p, &r)
            xs.put(n + 1, &x[0])
        n += 1
    return tau, xs.take(n + 1), ys.take(tau)
