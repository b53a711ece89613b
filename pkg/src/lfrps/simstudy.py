"""Monte Carlo study of the EM estimator.

One *cell* fixes (family, a, b, theta, n) and repeats sample-then-fit
``reps`` times.  Reported per parameter: average estimate (AE), bias, the
empirical standard deviation and pairwise covariances of the estimates
across replications (Sim.std / Sim.Cov), and the averages of the
per-replication Louis-information standard errors and covariances
(EM.std / EM.Cov).  Replications whose EM run fails to converge, or whose
Louis matrix cannot produce standard errors, are excluded and counted as
failures; a cell with more than half its replications failed is marked
invalid.

Reproducibility: replication r of a cell draws its data from
``SeedSequence([seed, r])``, so results are byte-identical regardless of
how many worker processes run the cell.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .distribution import LfrpsDist
from .estimation import fit_em
from .families import Family

__all__ = ["SimConfig", "SimRow", "run_cell", "run_grid", "write_csv", "CSV_COLUMNS"]

_PAIRS = ((0, 1), (0, 2), (1, 2))  # (a,b), (a,theta), (b,theta)


@dataclass(frozen=True)
class SimConfig:
    """One simulation cell."""

    family: Family
    a: float
    b: float
    theta: float
    n: int
    reps: int
    seed: int
    tol: float = 1e-5
    max_iter: int = 5000

    def __post_init__(self) -> None:
        if self.n < 3 or self.reps < 2:
            raise ValueError("need n >= 3 and reps >= 2")
        # fail fast on an invalid truth rather than inside a worker
        LfrpsDist(self.a, self.b, self.theta, self.family)


@dataclass
class SimRow:
    """Aggregated results for one cell; triples ordered (a, b, theta) and
    covariance triples ordered (a,b), (a,theta), (b,theta)."""

    config: SimConfig
    ae: Tuple[float, float, float]
    bias: Tuple[float, float, float]
    sim_std: Tuple[float, float, float]
    em_std: Tuple[float, float, float]
    sim_cov: Tuple[float, float, float]
    em_cov: Tuple[float, float, float]
    failures: int
    valid: bool


def _theta_identifiable(fam: Family) -> bool:
    return not (fam.kind == "degenerate" or (fam.kind == "binomial" and fam.m == 1))


def _one_rep(args) -> Tuple[int, Optional[Tuple[float, ...]]]:
    """Worker: sample and fit one replication; None marks a failure."""
    (family_name, a, b, theta, n, seed, rep, tol, max_iter) = args
    fam = Family.parse(family_name)
    dist = LfrpsDist(a, b, theta, fam)
    rng = np.random.default_rng(np.random.SeedSequence([seed, rep]))
    x = dist.quantile(rng.random(n))
    try:
        fit = fit_em(fam, x, tol=tol, max_iter=max_iter)
    except Exception:
        return rep, None
    check = fit.se if _theta_identifiable(fam) else fit.se[:2]
    if not fit.converged or any(math.isnan(s) for s in check):
        return rep, None
    if fit.cov is None:
        cov = (math.nan,) * 3
    else:
        cov = tuple(float(fit.cov[i, j]) for i, j in _PAIRS)
    return rep, (fit.dist.a, fit.dist.b, fit.dist.theta, *fit.se, *cov)


def run_cell(config: SimConfig, workers: int = 1) -> SimRow:
    """Run one cell, optionally across worker processes.

    The aggregation order is fixed by replication index, so the result does
    not depend on ``workers``.
    """
    tasks = [
        (
            config.family.name,
            config.a,
            config.b,
            config.theta,
            config.n,
            config.seed,
            rep,
            config.tol,
            config.max_iter,
        )
        for rep in range(config.reps)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            raw = list(pool.map(_one_rep, tasks, chunksize=max(1, config.reps // (4 * workers))))
    else:
        raw = [_one_rep(t) for t in tasks]
    raw.sort(key=lambda item: item[0])
    rows = [vals for _, vals in raw if vals is not None]
    failures = config.reps - len(rows)
    valid = failures <= config.reps / 2
    if len(rows) < 2:
        nan3 = (math.nan,) * 3
        return SimRow(config, nan3, nan3, nan3, nan3, nan3, nan3, failures, False)
    arr = np.array(rows)
    est = arr[:, :3]
    se = arr[:, 3:6]
    covs = arr[:, 6:9]
    ae = tuple(float(v) for v in est.mean(axis=0))
    truth = (config.a, config.b, config.theta)
    bias = tuple(ae[k] - truth[k] for k in range(3))
    sim_std = tuple(float(v) for v in est.std(axis=0, ddof=1))
    emp = np.cov(est, rowvar=False, ddof=1)
    sim_cov = tuple(float(emp[i, j]) for i, j in _PAIRS)
    em_std = tuple(float(v) for v in se.mean(axis=0))
    em_cov = tuple(float(v) for v in covs.mean(axis=0))
    return SimRow(config, ae, bias, sim_std, em_std, sim_cov, em_cov, failures, valid)


def run_grid(configs: Sequence[SimConfig], workers: int = 1) -> List[SimRow]:
    if not configs:
        raise ValueError("empty simulation grid")
    return [run_cell(c, workers=workers) for c in configs]


CSV_COLUMNS = (
    ["family", "a", "b", "theta", "n", "reps"]
    + [f"AE_{p}" for p in ("a", "b", "theta")]
    + [f"Bias_{p}" for p in ("a", "b", "theta")]
    + [f"Sim.std_{p}" for p in ("a", "b", "theta")]
    + [f"EM.std_{p}" for p in ("a", "b", "theta")]
    + ["Sim.Cov_ab", "Sim.Cov_atheta", "Sim.Cov_btheta"]
    + ["EM.Cov_ab", "EM.Cov_atheta", "EM.Cov_btheta"]
    + ["failures", "valid"]
)


def write_csv(rows: Sequence[SimRow], path) -> None:
    """Emit the grid as CSV; floats at 17 significant digits (round-trip safe)."""

    def f(v: float) -> str:
        return "%.17g" % v

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            c = r.config
            w.writerow(
                [c.family.name, f(c.a), f(c.b), f(c.theta), c.n, c.reps]
                + [f(v) for v in r.ae]
                + [f(v) for v in r.bias]
                + [f(v) for v in r.sim_std]
                + [f(v) for v in r.em_std]
                + [f(v) for v in r.sim_cov]
                + [f(v) for v in r.em_cov]
                + [r.failures, int(r.valid)]
            )
