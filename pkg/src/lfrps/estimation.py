"""Maximum-likelihood fitting of the compound model.

Two routes to the MLE of (a, b, theta):

* direct quasi-Newton ascent of the observed-data log-likelihood with
  analytic score and observed information, and
* an EM algorithm over the latent component count, whose three M-step
  equations each have a unique root inside a computable bracket, with
  standard errors recovered by the Louis decomposition
  J = (complete information) - (missing information).

The EM inner loop runs on a compiled kernel when available and on a numpy
twin otherwise; see ``lfrps._emcore_py``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import optimize, stats

from . import _emcore_py
from .distribution import LfrpsDist
from .families import DomainError, Family

try:
    from . import _emcore as _fast

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on build environment
    _fast = None
    HAVE_COMPILED = False

BACKEND = "cython" if HAVE_COMPILED else "python"


def _kernel(backend: Optional[str]):
    if backend in (None, BACKEND):
        return _fast if HAVE_COMPILED else _emcore_py
    if backend == "python":
        return _emcore_py
    if backend == "cython":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled EM kernel is not available")
        return _fast
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# data plumbing


def _as_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("data must be a nonempty 1-d array")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise ValueError("all observations must be positive finite reals")
    return x


@dataclass
class FitResult:
    """Outcome of a maximum-likelihood fit."""

    dist: LfrpsDist
    loglik: float
    se: Tuple[float, float, float]
    cov: Optional[np.ndarray]
    ci: dict
    level: float
    iterations: int
    converged: bool
    method: str
    trace: Optional[list] = None
    backend: str = BACKEND

    @property
    def params(self) -> Tuple[float, float, float]:
        return (self.dist.a, self.dist.b, self.dist.theta)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "family": self.dist.family.name,
            "estimates": {"a": self.dist.a, "b": self.dist.b, "theta": self.dist.theta},
            "se": {k: (None if math.isnan(v) else v) for k, v in zip("ab", self.se[:2])}
            | {"theta": None if math.isnan(self.se[2]) else self.se[2]},
            "ci": {
                "level": 1.0 - self.level,
                **{k: (None if v is None else list(v)) for k, v in self.ci.items()},
            },
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
        }


# ---------------------------------------------------------------------------
# likelihood, score, observed information


def log_likelihood(dist: LfrpsDist, data) -> float:
    """Observed-data log-likelihood.

    Evaluated in the grouped form n log(theta/C(theta)) + sum log(a+b x_i)
    - n a xbar - (n b / 2) x2bar + sum log C'(theta p_i), which stays real
    on the extended geometric range where log(theta) alone would not.
    """
    x = _as_data(data)
    a, b, theta, fam = dist.a, dist.b, dist.theta, dist.family
    lin = a + b * x
    if np.any(lin <= 0):
        return -math.inf
    u = theta * np.exp(-(a * x + 0.5 * b * x * x))
    c1 = fam.c_vec(u, 1)
    return float(
        x.size * fam.log_theta_over_c(theta)
        + np.sum(np.log(lin))
        - a * np.sum(x)
        - 0.5 * b * np.sum(x * x)
        + np.sum(np.log(c1))
    )


def _bt(fam: Family, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """B = C''/C' and T = C'''/C' at u."""
    c1 = fam.c_vec(u, 1)
    return fam.c_vec(u, 2) / c1, fam.c_vec(u, 3) / c1


def _dlog_theta_over_c(fam: Family, theta: float) -> float:
    """d/dtheta log(theta / C(theta)) = 1/theta - C'/C, stable per family."""
    if fam.kind == "geometric":
        return -1.0 / (1.0 - theta)
    if fam.kind == "degenerate":
        return 0.0
    return 1.0 / theta - fam.c(theta, 1) / fam.c(theta)


def _d2log_theta_over_c(fam: Family, theta: float) -> float:
    if fam.kind == "geometric":
        return -1.0 / (1.0 - theta) ** 2
    if fam.kind == "degenerate":
        return 0.0
    c0, c1, c2 = fam.c(theta), fam.c(theta, 1), fam.c(theta, 2)
    return -1.0 / theta ** 2 - (c2 / c0 - (c1 / c0) ** 2)


def score(dist: LfrpsDist, data) -> np.ndarray:
    """Gradient of the log-likelihood in (a, b, theta)."""
    x = _as_data(data)
    a, b, theta, fam = dist.a, dist.b, dist.theta, dist.family
    lin = a + b * x
    p = np.exp(-(a * x + 0.5 * b * x * x))
    u = theta * p
    big_b, _ = _bt(fam, u)
    s_a = np.sum(1.0 / lin) - np.sum(x) - np.sum(x * u * big_b)
    s_b = np.sum(x / lin) - 0.5 * np.sum(x * x) - 0.5 * np.sum(x * x * u * big_b)
    s_t = np.sum(p * big_b) + x.size * _dlog_theta_over_c(fam, theta)
    return np.array([s_a, s_b, s_t])


def observed_information(dist: LfrpsDist, data) -> np.ndarray:
    """Negative Hessian of the log-likelihood, analytic closed form.

    Entries are derived directly from the score; a central-difference
    Hessian oracle in the test suite pins them down.
    """
    x = _as_data(data)
    a, b, theta, fam = dist.a, dist.b, dist.theta, dist.family
    w = 1.0 / (a + b * x)
    p = np.exp(-(a * x + 0.5 * b * x * x))
    u = theta * p
    big_b, big_t = _bt(fam, u)
    # common factor of the kernel second derivatives
    g = u * big_b + u * u * (big_t - big_b * big_b)
    x2 = x * x
    i_aa = np.sum(w * w) - np.sum(x2 * g)
    i_ab = np.sum(x * w * w) - 0.5 * np.sum(x * x2 * g)
    i_bb = np.sum(x2 * w * w) - 0.25 * np.sum(x2 * x2 * g)
    dg = p * big_b + p * u * (big_t - big_b * big_b)
    i_at = np.sum(x * dg)
    i_bt = 0.5 * np.sum(x2 * dg)
    i_tt = -np.sum(p * p * (big_t - big_b * big_b)) - x.size * _d2log_theta_over_c(fam, theta)
    return np.array([[i_aa, i_ab, i_at], [i_ab, i_bb, i_bt], [i_at, i_bt, i_tt]])


# ---------------------------------------------------------------------------
# interval estimation helpers


def _theta_free(fam: Family) -> bool:
    """Whether theta is identifiable (it cancels for the one-point family)."""
    return not (fam.kind == "degenerate" or (fam.kind == "binomial" and fam.m == 1))


def _se_ci(info: np.ndarray, est: Sequence[float], gamma: float, theta_free: bool):
    """(se triple, covariance, ci dict) from an information matrix.

    Returns nan standard errors (and a None covariance) when the matrix is
    singular or has a nonpositive diagonal after inversion.
    """
    names = ("a", "b", "theta")
    idx = [0, 1, 2] if theta_free else [0, 1]
    se = [math.nan] * 3
    cov_full = None
    try:
        sub = np.linalg.inv(info[np.ix_(idx, idx)])
        diag = np.diag(sub)
        if np.all(diag > 0):
            cov_full = np.full((3, 3), np.nan)
            cov_full[np.ix_(idx, idx)] = sub
            for j, k in enumerate(idx):
                se[k] = math.sqrt(diag[j])
    except np.linalg.LinAlgError:
        pass
    z = stats.norm.ppf(1.0 - gamma / 2.0)
    ci = {}
    for k, name in enumerate(names):
        if math.isnan(se[k]):
            ci[name] = None
        else:
            ci[name] = (est[k] - z * se[k], est[k] + z * se[k])
    return tuple(se), cov_full, ci


def default_init(fam: Family, x: np.ndarray) -> Tuple[float, float, float]:
    """Scale-consistent starting point: (1/mean x, 1/mean x^2, mid-domain theta)."""
    return (1.0 / float(np.mean(x)), 1.0 / float(np.mean(x * x)), fam.default_theta())


# ---------------------------------------------------------------------------
# direct optimization


def _projected_score(dist: LfrpsDist, g: np.ndarray) -> np.ndarray:
    """Score with boundary components removed (KKT condition at a=0 / b=0).

    At an active lower bound the parameter can only increase, so a
    nonpositive score component there is stationary.
    """
    out = g.copy()
    if dist.a == 0.0 and g[0] < 0.0:
        out[0] = 0.0
    if dist.b == 0.0 and g[1] < 0.0:
        out[1] = 0.0
    return out


def fit_direct(
    family: Family,
    data,
    init: Optional[Tuple[float, float, float]] = None,
    gamma: float = 0.05,
    max_iter: int = 1000,
    extended: bool = False,
) -> FitResult:
    """Quasi-Newton maximization of the observed-data log-likelihood.

    ``extended=True`` widens the geometric theta search to the extended
    domain theta < 1 (it can hide the native-domain mode behind a second
    stationary point, so it is opt-in).
    """
    x = _as_data(data)
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    if init is None:
        init = default_init(family, x)
    theta_free = _theta_free(family)
    tiny = 1e-10
    use_ext = extended and family.kind == "geometric"
    lo, hi = family.theta_bounds(extended=use_ext)
    if use_ext:
        lo = -50.0
    t_lo = lo + tiny if math.isfinite(lo) else lo
    t_hi = hi - tiny if math.isfinite(hi) else hi
    bounds = [(0.0, None), (0.0, None), (t_lo if theta_free else init[2], t_hi if theta_free else init[2])]

    # large finite penalty rather than inf: keeps L-BFGS-B's line search
    # backtracking instead of stalling when it probes the a=b=0 corner
    # (too large and its relative-reduction stop fires immediately)
    big = 1e12

    def negll(v):
        a, b, th = v
        if a + b <= 0:
            return big
        try:
            d = LfrpsDist(a, b, th, family)
        except DomainError:
            return big
        ll = log_likelihood(d, x)
        return big if not math.isfinite(ll) else -ll

    def grad(v):
        a, b, th = v
        if a + b <= 0:
            return np.zeros(3)
        try:
            d = LfrpsDist(a, b, th, family)
        except DomainError:
            return np.zeros(3)
        g = -score(d, x)
        if not theta_free:
            g[2] = 0.0
        return g

    res = optimize.minimize(
        negll,
        np.asarray(init, dtype=float),
        jac=grad,
        method="L-BFGS-B",
        bounds=bounds,
        options={"maxiter": max_iter, "ftol": 1e-15, "gtol": 1e-12},
    )
    a, b, th = res.x
    dist = LfrpsDist(max(a, 0.0), max(b, 0.0), th, family)
    # interior Newton polish: L-BFGS-B's own criterion is looser than ours
    for _ in range(50):
        g = _projected_score(dist, score(dist, x))
        if not theta_free:
            g[2] = 0.0
        if np.max(np.abs(g)) < 1e-8 * x.size:
            break
        info = observed_information(dist, x)
        if not theta_free:
            info = info.copy()
            info[2, :] = info[:, 2] = 0.0
            info[2, 2] = 1.0
        try:
            step = np.linalg.solve(info, g)
        except np.linalg.LinAlgError:
            break
        scale = 1.0
        cand = None
        base = log_likelihood(dist, x)
        for _ in range(30):
            trial = np.array([dist.a, dist.b, dist.theta]) + scale * step
            ta = max(trial[0], 0.0)
            tb = max(trial[1], 0.0)
            tt = min(max(trial[2], t_lo), t_hi) if theta_free else dist.theta
            try:
                d2 = LfrpsDist(ta, tb, tt, family)
            except DomainError:
                scale *= 0.5
                continue
            if log_likelihood(d2, x) >= base:
                cand = d2
                break
            scale *= 0.5
        if cand is None or (cand.a, cand.b, cand.theta) == (dist.a, dist.b, dist.theta):
            break
        dist = cand
    g = _projected_score(dist, score(dist, x))
    if not theta_free:
        g[2] = 0.0
    converged = bool(np.max(np.abs(g)) < 1e-6 * x.size)
    info = observed_information(dist, x)
    se, cov, ci = _se_ci(info, (dist.a, dist.b, dist.theta), gamma, theta_free)
    return FitResult(
        dist=dist,
        loglik=log_likelihood(dist, x),
        se=se,
        cov=cov,
        ci=ci,
        level=gamma,
        iterations=int(res.nit),
        converged=converged,
        method="direct",
    )


# ---------------------------------------------------------------------------
# EM algorithm


def em_e_step(dist: LfrpsDist, data) -> np.ndarray:
    """E(Z | X = x_i) = 1 + u C''(u)/C'(u) at u = theta p_i; >= 1 on native theta."""
    x = _as_data(data)
    return _emcore_py.e_step(x, dist.family.code, dist.family.m, dist.a, dist.b, dist.theta)


def em_m_step_a(b_fixed: float, z, data) -> float:
    return _emcore_py.m_step_a(_as_data(data), np.asarray(z, dtype=float), b_fixed)


def em_m_step_b(a_fixed: float, z, data) -> float:
    return _emcore_py.m_step_b(_as_data(data), np.asarray(z, dtype=float), a_fixed)


def em_m_step_theta(family: Family, z, current_theta: Optional[float] = None) -> float:
    theta = family.default_theta() if current_theta is None else current_theta
    return _emcore_py.m_step_theta(family.code, family.m, np.asarray(z, dtype=float), theta)


def fit_em(
    family: Family,
    data,
    init: Optional[Tuple[float, float, float]] = None,
    tol: float = 1e-5,
    max_iter: int = 5000,
    gamma: float = 0.05,
    trace: bool = False,
    backend: Optional[str] = None,
) -> FitResult:
    """EM fit; converged when successive estimates move less than ``tol``."""
    x = _as_data(data)
    if x.size < 3:
        raise ValueError("need at least 3 observations")
    if init is None:
        init = default_init(family, x)
    kern = _kernel(backend)
    hist, converged = kern.em_path(
        x, family.code, family.m, init[0], init[1], init[2], tol, max_iter
    )
    a, b, theta = hist[-1]
    dist = LfrpsDist(a, b, theta, family)
    j, se3 = louis_information(dist, x)
    se, cov, ci = _se_ci(j, (a, b, theta), gamma, _theta_free(family))
    trace_rows = None
    if trace:
        trace_rows = [
            (i, log_likelihood(LfrpsDist(r[0], r[1], r[2], family), x))
            for i, r in enumerate(hist)
        ]
    return FitResult(
        dist=dist,
        loglik=log_likelihood(dist, x),
        se=se,
        cov=cov,
        ci=ci,
        level=gamma,
        iterations=hist.shape[0] - 1,
        converged=converged,
        method="em",
        trace=trace_rows,
        backend=getattr(kern, "BACKEND_NAME", BACKEND),
    )


def latent_variance(dist: LfrpsDist, data) -> np.ndarray:
    """Var(Z | X = x_i) in terms of C', C'', C''' at u = theta p_i."""
    x = _as_data(data)
    u = dist.theta * np.exp(-(dist.a * x + 0.5 * dist.b * x * x))
    fam = dist.family
    c1 = fam.c_vec(u, 1)
    c2 = fam.c_vec(u, 2)
    c3 = fam.c_vec(u, 3)
    ez2 = (u * u * c3 + c1 + 3.0 * u * c2) / c1
    ez = (c1 + u * c2) / c1
    return ez2 - ez * ez


def louis_information(dist: LfrpsDist, data) -> Tuple[np.ndarray, Tuple[float, float, float]]:
    """Observed information at an EM fixed point by the Louis decomposition.

    J = expected complete-data information minus the covariance of the
    complete-data score, both conditional on the observed data.  Returns
    (J, se triple); the standard errors are nan when J cannot be inverted
    with a positive diagonal.
    """
    x = _as_data(data)
    a, b, theta, fam = dist.a, dist.b, dist.theta, dist.family
    n = x.size
    w = 1.0 / (a + b * x)
    x2 = x * x
    z = em_e_step(dist, x)
    c0, c1, c2 = fam.c(theta), fam.c(theta, 1), fam.c(theta, 2)
    lc = np.zeros((3, 3))
    lc[0, 0] = np.sum(w * w)
    lc[0, 1] = lc[1, 0] = np.sum(x * w * w)
    lc[1, 1] = np.sum(x2 * w * w)
    lc[2, 2] = np.sum(z) / theta ** 2 + n * (c2 / c0 - (c1 / c0) ** 2)
    v = latent_variance(dist, x)
    lm = np.zeros((3, 3))
    lm[0, 0] = np.sum(x2 * v)
    lm[0, 1] = lm[1, 0] = 0.5 * np.sum(x * x2 * v)
    lm[0, 2] = lm[2, 0] = -np.sum(x * v) / theta
    lm[1, 1] = 0.25 * np.sum(x2 * x2 * v)
    lm[1, 2] = lm[2, 1] = -0.5 * np.sum(x2 * v) / theta
    lm[2, 2] = np.sum(v) / theta ** 2
    j = lc - lm
    se, _, _ = _se_ci(j, (a, b, theta), 0.05, _theta_free(fam))
    return j, se


# ---------------------------------------------------------------------------
# score-equation bracket diagnostics


def score_root_brackets(
    family: Family,
    data,
    which: str,
    a: Optional[float] = None,
    b: Optional[float] = None,
    theta: Optional[float] = None,
):
    """Diagnostic brackets / existence conditions for the score equations.

    ``which='a'`` (requires b, theta) and ``which='b'`` (requires a, theta)
    return an interval guaranteed to contain the corresponding root of the
    score component, with the other parameters held at the given values.
    ``which='theta'`` (requires a, b) returns an existence report based on
    the condition sum p_i > n/2 (plus the printed second condition for the
    binomial family, whose right side is negative for m > 1 and is flagged
    as vacuous).
    """
    x = _as_data(data)
    n = x.size
    xbar = float(np.mean(x))
    if which == "a":
        if b is None or theta is None:
            raise ValueError("which='a' requires b and theta")
        p0 = np.exp(-0.5 * b * x * x)
        u = theta * p0
        big_b, _ = _bt(family, u)
        k1 = float(np.sum(theta * x * p0 * big_b))
        xmin, xmax = float(x.min()), float(x.max())
        if theta > 0:
            return (1.0 / (xbar + k1 / n) - b * xmax, 1.0 / xbar - b * xmin)
        return (1.0 / xbar - b * xmax, 1.0 / (xbar + k1 / n) - b * xmin)
    if which == "b":
        if a is None or theta is None:
            raise ValueError("which='b' requires a and theta")
        x2bar = float(np.mean(x * x))
        p0 = np.exp(-a * x)
        u = theta * p0
        big_b, _ = _bt(family, u)
        k2 = float(np.sum(theta * x * x * p0 * big_b))
        xmin, xmax = float(x.min()), float(x.max())
        if theta > 0:
            return (1.0 / (0.5 * x2bar + 0.5 * k2 / n) - a / xmin, 2.0 / x2bar - a / xmax)
        return (2.0 / x2bar - a / xmin, 1.0 / (0.5 * x2bar + 0.5 * k2 / n) - a / xmax)
    if which == "theta":
        if a is None or b is None:
            raise ValueError("which='theta' requires a and b")
        p = np.exp(-(a * x + 0.5 * b * x * x))
        sum_p = float(np.sum(p))
        report = {
            "sum_kernel": sum_p,
            "threshold": n / 2.0,
            "guaranteed": sum_p > n / 2.0,
        }
        if family.kind == "binomial":
            m = family.m
            rhs = n * m / (1.0 - m) if m != 1 else math.inf
            sum_inv = float(np.sum(1.0 / p))
            report["binomial_sum_inverse"] = sum_inv
            report["binomial_threshold"] = rhs
            report["binomial_threshold_negative"] = rhs < 0
            report["guaranteed"] = report["guaranteed"] and sum_inv > rhs
        return report
    raise ValueError("which must be 'a', 'b' or 'theta'")
