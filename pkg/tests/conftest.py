"""Shared fixtures and numeric oracles for the test suite."""

import numpy as np
import pytest

from lfrps import Family, LfrpsDist
from lfrps.estimation import log_likelihood


def family_grid():
    """Families with a couple of native mid-domain thetas each."""
    return [
        (Family.geometric(), [0.3, 0.9]),
        (Family.poisson(), [0.5, 3.0]),
        (Family.logarithmic(), [0.4, 0.95]),
        (Family.binomial(3), [0.7, 2.5]),
        (Family.degenerate(), [1.0]),
    ]


AB_GRID = [(1.0, 0.0), (0.0, 1.0), (0.5, 0.8), (1.5, 2.0), (0.2, 0.1)]


def dist_grid():
    """The 45-point (family, theta) x (a, b) correctness grid."""
    out = []
    for fam, thetas in family_grid():
        for theta in thetas:
            for a, b in AB_GRID:
                out.append(LfrpsDist(a, b, theta, fam))
    return out


def random_instance(rng, with_data=True, n=40):
    """A random valid (dist, data) pair across all families."""
    fam, thetas = family_grid()[rng.integers(0, 5)]
    theta = float(rng.uniform(0.1, 0.9)) if fam.kind in ("geometric", "logarithmic") else float(
        rng.uniform(0.2, 3.0)
    )
    if fam.kind == "degenerate":
        theta = 1.0
    a = float(rng.uniform(0.05, 2.0))
    b = float(rng.uniform(0.05, 2.0))
    dist = LfrpsDist(a, b, theta, fam)
    if not with_data:
        return dist
    x = dist.quantile(rng.random(n) * 0.999 + 0.0005)
    return dist, x


def numeric_gradient(dist, x, h=1e-6):
    """Central-difference gradient of the log-likelihood in (a, b, theta)."""
    p0 = np.array([dist.a, dist.b, dist.theta])
    g = np.zeros(3)
    for k in range(3):
        step = h * max(1.0, abs(p0[k]))
        for s, w in ((step, 0.5), (-step, -0.5)):
            p = p0.copy()
            p[k] += s
            g[k] += w / step * log_likelihood(LfrpsDist(p[0], p[1], p[2], dist.family), x)
    return g


def numeric_hessian(dist, x, h=1e-5):
    """Central differences of the analytic score (one order more accurate
    than double-differencing the log-likelihood)."""
    from lfrps.estimation import score

    p0 = np.array([dist.a, dist.b, dist.theta])
    hess = np.zeros((3, 3))
    for k in range(3):
        step = h * max(1.0, abs(p0[k]))
        pp, pm = p0.copy(), p0.copy()
        pp[k] += step
        pm[k] -= step
        sp = score(LfrpsDist(pp[0], pp[1], pp[2], dist.family), x)
        sm = score(LfrpsDist(pm[0], pm[1], pm[2], dist.family), x)
        hess[k] = (sp - sm) / (2.0 * step)
    return 0.5 * (hess + hess.T)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
