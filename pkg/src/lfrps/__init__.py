"""Linear failure rate power series (LFRPS) lifetime distributions.

A series system of N components with linear failure rate lifetimes, N
drawn from a zero-truncated power series law, has lifetime min of the
components; this package evaluates, samples and fits that compound family
and includes a goodness-of-fit suite and a Monte Carlo study harness.
"""

from .distribution import LfrpsDist, limiting_lfr_params
from .estimation import (
    BACKEND,
    FitResult,
    HAVE_COMPILED,
    fit_direct,
    fit_em,
    log_likelihood,
    louis_information,
    observed_information,
    score,
    score_root_brackets,
)
from .families import DomainError, Family
from .gof import (
    GofReport,
    LrTestResult,
    ad_statistic,
    cm_statistic,
    gof_report,
    info_criteria,
    ks_test,
    lr_test,
    ttt_transform,
)
from .simstudy import SimConfig, SimRow, run_cell, run_grid

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DomainError",
    "Family",
    "FitResult",
    "GofReport",
    "HAVE_COMPILED",
    "LfrpsDist",
    "LrTestResult",
    "SimConfig",
    "SimRow",
    "ad_statistic",
    "cm_statistic",
    "fit_direct",
    "fit_em",
    "gof_report",
    "info_criteria",
    "ks_test",
    "limiting_lfr_params",
    "log_likelihood",
    "louis_information",
    "lr_test",
    "observed_information",
    "run_cell",
    "run_grid",
    "score",
    "score_root_brackets",
    "ttt_transform",
]
