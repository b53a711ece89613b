"""Goodness-of-fit and model-comparison tools.

Every function here takes the fitted cdf as a plain callable so the module
has no dependency on how the fit was produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

__all__ = [
    "GofReport",
    "LrTestResult",
    "info_criteria",
    "ks_test",
    "ad_statistic",
    "cm_statistic",
    "lr_test",
    "ttt_transform",
    "gof_report",
]

_F_CLIP = 1e-12


def _sorted_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("data must be a nonempty 1-d array")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise ValueError("all observations must be positive finite reals")
    return np.sort(x)


def _fitted_probs(cdf: Callable, x: np.ndarray) -> np.ndarray:
    f = np.asarray(cdf(x), dtype=float)
    # guard the log terms of AD against exactly-0/1 fitted probabilities
    return np.clip(f, _F_CLIP, 1.0 - _F_CLIP)


def info_criteria(loglik: float, n_params: int, n_obs: int) -> dict:
    """AIC, small-sample corrected AIC, and BIC."""
    if n_obs - n_params - 1 <= 0:
        raise ValueError("AICC needs n_obs > n_params + 1")
    aic = -2.0 * loglik + 2.0 * n_params
    return {
        "aic": aic,
        "aicc": aic + 2.0 * n_params * (n_params + 1.0) / (n_obs - n_params - 1.0),
        "bic": -2.0 * loglik + n_params * math.log(n_obs),
    }


def _kolmogorov_sf(t: float) -> float:
    """P(K > t) for the Kolmogorov statistic, alternating series to 1e-10."""
    if t <= 0.0:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = 2.0 * (-1.0) ** (k - 1) * math.exp(-2.0 * k * k * t * t)
        total += term
        if abs(term) < 1e-10:
            break
    return min(max(total, 0.0), 1.0)


def ks_test(cdf: Callable, data) -> Tuple[float, float]:
    """Kolmogorov-Smirnov D and its asymptotic p-value."""
    x = _sorted_data(data)
    n = x.size
    f = _fitted_probs(cdf, x)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
    return d, _kolmogorov_sf(math.sqrt(n) * d)


def ad_statistic(cdf: Callable, data) -> float:
    """Anderson-Darling A^2."""
    x = _sorted_data(data)
    n = x.size
    f = _fitted_probs(cdf, x)
    i = np.arange(1, n + 1)
    s = np.sum((2.0 * i - 1.0) * (np.log(f) + np.log1p(-f[::-1])))
    return float(-n - s / n)


def cm_statistic(cdf: Callable, data) -> float:
    """Cramer-von Mises W^2."""
    x = _sorted_data(data)
    n = x.size
    f = _fitted_probs(cdf, x)
    i = np.arange(1, n + 1)
    return float(1.0 / (12.0 * n) + np.sum((f - (2.0 * i - 1.0) / (2.0 * n)) ** 2))


@dataclass
class LrTestResult:
    statistic: float
    df: int
    p_value: float
    loglik_null: float
    loglik_alt: float

    def to_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "loglik_null": self.loglik_null,
            "loglik_alt": self.loglik_alt,
        }


def lr_test(loglik_null: float, loglik_alt: float, df: int,
            slack: float = 1e-8) -> LrTestResult:
    """Likelihood-ratio test of a nested null against the full model.

    The statistic 2(l1 - l0) is clamped to zero when it is negative by no
    more than ``slack`` (numerical noise at a shared optimum); a larger
    negative value means the models are not nested as claimed and raises.
    """
    if df < 1:
        raise ValueError("df must be >= 1")
    lam = 2.0 * (loglik_alt - loglik_null)
    if lam < -slack:
        raise ValueError(
            f"negative LR statistic {lam}: the null does not appear nested in the alternative"
        )
    lam = max(lam, 0.0)
    return LrTestResult(
        statistic=lam,
        df=df,
        p_value=float(stats.chi2.sf(lam, df)),
        loglik_null=loglik_null,
        loglik_alt=loglik_alt,
    )


def ttt_transform(data) -> Tuple[np.ndarray, np.ndarray]:
    """Scaled total-time-on-test transform.

    Returns (i/n, T_i) for i = 0..n with T_0 = 0 and
    T_i = (sum_{j<=i} x_(j) + (n - i) x_(i)) / sum_j x_(j).  A concave plot
    suggests an increasing hazard rate.
    """
    x = _sorted_data(data)
    n = x.size
    csum = np.cumsum(x)
    total = csum[-1]
    i = np.arange(1, n + 1)
    t = (csum + (n - i) * x) / total
    return np.concatenate(([0.0], i / n)), np.concatenate(([0.0], t))


@dataclass
class GofReport:
    n_obs: int
    n_params: int
    loglik: float
    aic: float
    aicc: float
    bic: float
    ks_statistic: float
    ks_p_value: float
    ad_statistic: float
    cm_statistic: float

    def to_dict(self) -> dict:
        return {
            "n_obs": self.n_obs,
            "n_params": self.n_params,
            "loglik": self.loglik,
            "aic": self.aic,
            "aicc": self.aicc,
            "bic": self.bic,
            "ks": {"statistic": self.ks_statistic, "p_value": self.ks_p_value},
            "ad_statistic": self.ad_statistic,
            "cm_statistic": self.cm_statistic,
        }


def gof_report(cdf: Callable, data, loglik: float, n_params: int) -> GofReport:
    """One-stop summary: information criteria plus the three EDF statistics."""
    x = _sorted_data(data)
    ic = info_criteria(loglik, n_params, x.size)
    d, p = ks_test(cdf, x)
    return GofReport(
        n_obs=x.size,
        n_params=n_params,
        loglik=loglik,
        aic=ic["aic"],
        aicc=ic["aicc"],
        bic=ic["bic"],
        ks_statistic=d,
        ks_p_value=p,
        ad_statistic=ad_statistic(cdf, x),
        cm_statistic=cm_statistic(cdf, x),
    )
