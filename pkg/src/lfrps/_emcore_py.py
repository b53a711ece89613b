"""Pure numpy EM kernels; reference implementation of the hot loop.

A compiled twin of this module (``lfrps._emcore``) is built when a C
toolchain is available; ``lfrps.estimation`` picks whichever imports.
Both expose the same functions with the same semantics.

Families are identified by the integer codes from ``lfrps.families``:
0 geometric, 1 poisson, 2 logarithmic, 3 binomial, 4 degenerate.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

_GEO, _POI, _LOG, _BIN, _DEG = range(5)

_THETA_FLOOR = 1e-12


def e_step(x, code, m, a, b, theta):
    """Posterior mean of the latent component count, one value per datum."""
    x = np.asarray(x, dtype=float)
    if code == _DEG:
        return np.ones_like(x)
    u = theta * np.exp(-(a * x + 0.5 * b * x * x))
    if code == _GEO:
        return 1.0 + 2.0 * u / (1.0 - u)
    if code == _POI:
        return 1.0 + u
    if code == _LOG:
        return 1.0 + u / (1.0 - u)
    # binomial
    return 1.0 + (m - 1) * u / (1.0 + u)


def _newton_bisect(f, fp, lo, hi, flo, fhi):
    """Root of f inside a verified sign-change bracket [lo, hi].

    Newton steps are taken only while they stay inside the current bracket;
    otherwise the step falls back to bisection.  200 iterations bound.
    """
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = f(x)
        if fx == 0.0:
            return x
        if (fx > 0.0) == (flo > 0.0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        if hi - lo <= 1e-15 * max(1.0, abs(lo), abs(hi)):
            break
        d = fp(x)
        if d != 0.0:
            xn = x - fx / d
            if lo < xn < hi:
                x = xn
                continue
        x = 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def m_step_a(x, z, b):
    """Root of sum 1/(a + b x_i) = sum z_i x_i over a >= 0.

    The root is unique and lies in (n/c1 - b x_max, n/c1 - b x_min); when
    that interval sits below zero the maximizer is the a = 0 boundary.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    n = x.size
    c1 = float(z @ x)
    if c1 <= 0.0:
        raise ValueError("sum of z_i x_i must be positive")
    if b == 0.0:
        return n / c1
    hi = n / c1 - b * float(x.min())
    if hi <= 0.0:
        return 0.0

    def h(a):
        return float(np.sum(1.0 / (a + b * x))) - c1

    def hp(a):
        return -float(np.sum(1.0 / (a + b * x) ** 2))

    lo = max(0.0, n / c1 - b * float(x.max()))
    flo = h(lo)
    if flo <= 0.0:
        return 0.0 if lo == 0.0 else lo
    fhi = h(hi)
    if fhi >= 0.0:
        return hi
    return _newton_bisect(h, hp, lo, hi, flo, fhi)


def m_step_b(x, z, a):
    """Root of sum x_i/(a + b x_i) = sum z_i x_i^2 / 2 over b >= 0.

    Writing each term as 1/(a/x_i + b) traps the root between
    2n/c2 - a/x_min and 2n/c2 - a/x_max; below zero means the b = 0
    boundary maximizes.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    n = x.size
    c2 = float(z @ (x * x))
    if c2 <= 0.0:
        raise ValueError("sum of z_i x_i^2 must be positive")
    xmin, xmax = float(x.min()), float(x.max())
    if a == 0.0:
        return 2.0 * n / c2  # pure Rayleigh update, closed form
    hi = 2.0 * n / c2 - a / xmax
    if hi <= 0.0:
        return 0.0

    def h(b):
        return float(np.sum(x / (a + b * x))) - 0.5 * c2

    def hp(b):
        return -float(np.sum((x / (a + b * x)) ** 2))

    lo = max(0.0, 2.0 * n / c2 - a / xmin)
    flo = h(lo)
    if flo <= 0.0:
        return 0.0 if lo == 0.0 else lo
    fhi = h(hi)
    if fhi >= 0.0:
        return hi
    return _newton_bisect(h, hp, lo, hi, flo, fhi)


def m_step_theta(code, m, z, theta):
    """Unique root of theta = (c0/n) C(theta)/C'(theta); c0 = sum z_i."""
    z = np.asarray(z, dtype=float)
    n = z.size
    c0 = float(np.sum(z))
    r = c0 / n
    if code == _DEG or (code == _BIN and m == 1):
        return theta  # theta cancels from the model
    if r <= 1.0 + 1e-14:
        return _THETA_FLOOR  # all z at 1: boundary at the domain infimum
    if code == _GEO:
        return 1.0 - 1.0 / r
    if code == _POI:
        def h(t):
            return t - r * -math.expm1(-t)

        def hp(t):
            return 1.0 - r * math.exp(-t)

        lo = math.log(r)  # interior minimum of h; root lies to its right
        hi = max(2.0 * lo, 1.0)
        while h(hi) <= 0.0:
            hi *= 2.0
        return _newton_bisect(h, hp, lo, hi, h(lo), h(hi))
    if code == _LOG:
        def h(t):
            return t + r * (1.0 - t) * math.log1p(-t)

        def hp(t):
            return 1.0 - r - r * math.log1p(-t)

        lo = -math.expm1(1.0 / r - 1.0)
        hi = 1.0 - 1e-15
        return _newton_bisect(h, hp, lo, hi, h(lo), h(hi))
    # binomial, m >= 2
    def h(t):
        return t - (r / m) * math.expm1(m * math.log1p(t)) / (1.0 + t) ** (m - 1)

    def hp(t):
        # h' = 1 - r * d/dt[C/C'] and d/dt[C/C'] = 1 - C C''/C'^2
        cc = math.expm1(m * math.log1p(t))
        c1 = m * (1.0 + t) ** (m - 1)
        c2 = m * (m - 1) * (1.0 + t) ** (m - 2)
        return 1.0 - r * (1.0 - cc * c2 / (c1 * c1))

    lo = 1e-8
    while h(lo) >= 0.0 and lo > 1e-300:
        lo /= 10.0
    hi = 1.0
    while h(hi) <= 0.0:
        hi *= 2.0
    return _newton_bisect(h, hp, lo, hi, h(lo), h(hi))


def em_path(x, code, m, a0, b0, theta0, tol, max_iter):
    """Run the EM iteration; returns (history, converged).

    ``history`` is a (k+1, 3) array of (a, b, theta) including the starting
    point.  Within one iteration the a-update uses the previous b, and the
    b-update already uses the new a; theta updates last.
    """
    x = np.asarray(x, dtype=float)
    a, b, theta = float(a0), float(b0), float(theta0)
    hist = [(a, b, theta)]
    converged = False
    for _ in range(int(max_iter)):
        z = e_step(x, code, m, a, b, theta)
        a_new = m_step_a(x, z, b)
        b_new = m_step_b(x, z, a_new)
        theta_new = m_step_theta(code, m, z, theta)
        delta = max(abs(a_new - a), abs(b_new - b), abs(theta_new - theta))
        a, b, theta = a_new, b_new, theta_new
        hist.append((a, b, theta))
        if delta < tol:
            converged = True
            break
    return np.array(hist, dtype=float), converged
