# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled EM kernels; twin of ``lfrps._emcore_py`` (same API, same math).

Keeps the per-replication fitting loop of the simulation study out of the
Python interpreter.
"""

from libc.math cimport exp, expm1, log, log1p, fabs, pow

import numpy as np

BACKEND_NAME = "cython"

cdef int _GEO = 0, _POI = 1, _LOG = 2, _BIN = 3, _DEG = 4

cdef double _THETA_FLOOR = 1e-12


cdef inline double _zvalue(int code, int m, double u) nogil:
    if code == _GEO:
        return 1.0 + 2.0 * u / (1.0 - u)
    elif code == _POI:
        return 1.0 + u
    elif code == _LOG:
        return 1.0 + u / (1.0 - u)
    elif code == _BIN:
        return 1.0 + (m - 1) * u / (1.0 + u)
    return 1.0


def e_step(x, int code, int m, double a, double b, double theta):
    """Posterior mean of the latent component count, one value per datum."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double u
    for i in range(n):
        u = theta * exp(-(a * xv[i] + 0.5 * b * xv[i] * xv[i]))
        ov[i] = _zvalue(code, m, u)
    return out


# -- a-step ------------------------------------------------------------------

cdef double _h1(double a, double[::1] x, double b, double c1) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        s += 1.0 / (a + b * x[i])
    return s - c1


cdef double _h1p(double a, double[::1] x, double b) nogil:
    cdef double s = 0.0, t
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        t = 1.0 / (a + b * x[i])
        s += t * t
    return -s


cdef double _solve_a(double[::1] x, double[::1] z, double b) except? -1.0:
    cdef Py_ssize_t n = x.shape[0], i
    cdef double c1 = 0.0, xmin, xmax
    for i in range(n):
        c1 += z[i] * x[i]
    if c1 <= 0.0:
        raise ValueError("sum of z_i x_i must be positive")
    if b == 0.0:
        return n / c1
    xmin = x[0]
    xmax = x[0]
    for i in range(1, n):
        if x[i] < xmin:
            xmin = x[i]
        if x[i] > xmax:
            xmax = x[i]
    cdef double hi = n / c1 - b * xmin
    if hi <= 0.0:
        return 0.0
    cdef double lo = n / c1 - b * xmax
    if lo < 0.0:
        lo = 0.0
    cdef double flo = _h1(lo, x, b, c1)
    if flo <= 0.0:
        return 0.0 if lo == 0.0 else lo
    cdef double fhi = _h1(hi, x, b, c1)
    if fhi >= 0.0:
        return hi
    # safeguarded Newton inside the bracket
    cdef double mid = 0.5 * (lo + hi), fx, d, xn
    cdef int it
    for it in range(200):
        fx = _h1(mid, x, b, c1)
        if fx == 0.0:
            return mid
        if (fx > 0.0) == (flo > 0.0):
            lo = mid; flo = fx
        else:
            hi = mid; fhi = fx
        if hi - lo <= 1e-15 * max(1.0, fabs(lo), fabs(hi)):
            break
        d = _h1p(mid, x, b)
        if d != 0.0:
            xn = mid - fx / d
            if lo < xn < hi:
                mid = xn
                continue
        mid = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


# -- b-step ------------------------------------------------------------------

cdef double _h2(double b, double[::1] x, double a, double c2) nogil:
    cdef double s = 0.0
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        s += x[i] / (a + b * x[i])
    return s - 0.5 * c2


cdef double _h2p(double b, double[::1] x, double a) nogil:
    cdef double s = 0.0, t
    cdef Py_ssize_t i
    for i in range(x.shape[0]):
        t = x[i] / (a + b * x[i])
        s += t * t
    return -s


cdef double _solve_b(double[::1] x, double[::1] z, double a) except? -1.0:
    cdef Py_ssize_t n = x.shape[0], i
    cdef double c2 = 0.0, xmin, xmax
    for i in range(n):
        c2 += z[i] * x[i] * x[i]
    if c2 <= 0.0:
        raise ValueError("sum of z_i x_i^2 must be positive")
    xmin = x[0]
    xmax = x[0]
    for i in range(1, n):
        if x[i] < xmin:
            xmin = x[i]
        if x[i] > xmax:
            xmax = x[i]
    if a == 0.0:
        return 2.0 * n / c2
    cdef double hi = 2.0 * n / c2 - a / xmax
    if hi <= 0.0:
        return 0.0
    cdef double lo = 2.0 * n / c2 - a / xmin
    if lo < 0.0:
        lo = 0.0
    cdef double flo = _h2(lo, x, a, c2)
    if flo <= 0.0:
        return 0.0 if lo == 0.0 else lo
    cdef double fhi = _h2(hi, x, a, c2)
    if fhi >= 0.0:
        return hi
    cdef double mid = 0.5 * (lo + hi), fx, d, xn
    cdef int it
    for it in range(200):
        fx = _h2(mid, x, a, c2)
        if fx == 0.0:
            return mid
        if (fx > 0.0) == (flo > 0.0):
            lo = mid; flo = fx
        else:
            hi = mid; fhi = fx
        if hi - lo <= 1e-15 * max(1.0, fabs(lo), fabs(hi)):
            break
        d = _h2p(mid, x, a)
        if d != 0.0:
            xn = mid - fx / d
            if lo < xn < hi:
                mid = xn
                continue
        mid = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


# -- theta-step --------------------------------------------------------------

cdef double _h3(int code, int m, double t, double r) nogil:
    cdef double cc, c1
    if code == _POI:
        return t - r * -expm1(-t)
    elif code == _LOG:
        return t + r * (1.0 - t) * log1p(-t)
    # binomial
    cc = expm1(m * log1p(t))
    c1 = m * pow(1.0 + t, m - 1)
    return t - r * cc / c1


cdef double _h3p(int code, int m, double t, double r) nogil:
    cdef double cc, c1, c2
    if code == _POI:
        return 1.0 - r * exp(-t)
    elif code == _LOG:
        return 1.0 - r - r * log1p(-t)
    cc = expm1(m * log1p(t))
    c1 = m * pow(1.0 + t, m - 1)
    c2 = m * (m - 1) * pow(1.0 + t, m - 2)
    return 1.0 - r * (1.0 - cc * c2 / (c1 * c1))


cdef double _solve_theta(int code, int m, double r, double theta):
    if code == _DEG or (code == _BIN and m == 1):
        return theta
    if r <= 1.0 + 1e-14:
        return _THETA_FLOOR
    if code == _GEO:
        return 1.0 - 1.0 / r
    cdef double lo, hi
    if code == _POI:
        lo = log(r)
        hi = max(2.0 * lo, 1.0)
        while _h3(code, m, hi, r) <= 0.0:
            hi *= 2.0
    elif code == _LOG:
        lo = -expm1(1.0 / r - 1.0)
        hi = 1.0 - 1e-15
    else:
        lo = 1e-8
        while _h3(code, m, lo, r) >= 0.0 and lo > 1e-300:
            lo /= 10.0
        hi = 1.0
        while _h3(code, m, hi, r) <= 0.0:
            hi *= 2.0
    cdef double flo = _h3(code, m, lo, r)
    cdef double fhi = _h3(code, m, hi, r)
    cdef double mid = 0.5 * (lo + hi), fx, d, xn
    cdef int it
    for it in range(200):
        fx = _h3(code, m, mid, r)
        if fx == 0.0:
            return mid
        if (fx > 0.0) == (flo > 0.0):
            lo = mid; flo = fx
        else:
            hi = mid; fhi = fx
        if hi - lo <= 1e-15 * max(1.0, fabs(lo), fabs(hi)):
            break
        d = _h3p(code, m, mid, r)
        if d != 0.0:
            xn = mid - fx / d
            if lo < xn < hi:
                mid = xn
                continue
        mid = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


# -- public API --------------------------------------------------------------

def m_step_a(x, z, double b):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    return _solve_a(xv, zv, b)


def m_step_b(x, z, double a):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    return _solve_b(xv, zv, a)


def m_step_theta(int code, int m, z, double theta):
    cdef double[::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef double c0 = 0.0
    cdef Py_ssize_t i
    for i in range(zv.shape[0]):
        c0 += zv[i]
    return _solve_theta(code, m, c0 / zv.shape[0], theta)


def em_path(x, int code, int m, double a0, double b0, double theta0,
            double tol, int max_iter):
    """Run the EM iteration; returns (history array, converged flag)."""
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], i
    hist = np.empty((max_iter + 1, 3), dtype=np.float64)
    cdef double[:, ::1] hv = hist
    z_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] zv = z_arr
    cdef double a = a0, b = b0, theta = theta0
    cdef double a_new, b_new, theta_new, delta, u, c0
    cdef int it, converged = 0, steps = 0
    hv[0, 0] = a; hv[0, 1] = b; hv[0, 2] = theta
    for it in range(max_iter):
        c0 = 0.0
        for i in range(n):
            u = theta * exp(-(a * xv[i] + 0.5 * b * xv[i] * xv[i]))
            zv[i] = _zvalue(code, m, u)
            c0 += zv[i]
        a_new = _solve_a(xv, zv, b)
        b_new = _solve_b(xv, zv, a_new)
        theta_new = _solve_theta(code, m, c0 / n, theta)
        delta = max(fabs(a_new - a), fabs(b_new - b), fabs(theta_new - theta))
        a = a_new; b = b_new; theta = theta_new
        steps = it + 1
        hv[steps, 0] = a; hv[steps, 1] = b; hv[steps, 2] = theta
        if delta < tol:
            converged = 1
            break
    return np.array(hist[: steps + 1]), bool(converged)
