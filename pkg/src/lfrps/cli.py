"""Command-line interface.

Subcommands: sample | fit | gof | simstudy | curves | ttt.  Dataset files
are UTF-8 text with one positive value per line and an optional header
line (auto-detected by being non-numeric).  Reports are JSON (fit, gof)
or CSV (sample, simstudy, curves, ttt).

Exit codes: 0 success, 2 input or domain error, 3 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import estimation, gof, simstudy
from .distribution import LfrpsDist
from .families import DomainError, Family

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOCONV = 3


def _fmt(v: float) -> str:
    return "%.17g" % v


def read_dataset(path: str) -> np.ndarray:
    """One value per line; a non-numeric first line is treated as a header."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh]
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from None
    lines = [ln for ln in lines if ln]
    if lines:
        try:
            float(lines[0])
        except ValueError:
            lines = lines[1:]
    if not lines:
        raise ValueError(f"{path}: no data values")
    try:
        vals = np.array([float(ln) for ln in lines])
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None
    if np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ValueError(f"{path}: all values must be positive finite reals")
    return vals


def _write_text(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dist_from_args(args) -> LfrpsDist:
    fam = Family.parse(args.family)
    return LfrpsDist(args.a, args.b, args.theta, fam)


def cmd_sample(args) -> int:
    dist = _dist_from_args(args)
    if args.n < 1:
        raise ValueError("n must be >= 1")
    x = dist.sample(args.n, args.seed)
    _write_text(args.out, "x\n" + "".join(_fmt(v) + "\n" for v in x))
    return EXIT_OK


def _gof_dict(dist: LfrpsDist, data: np.ndarray, loglik: float, n_params: int) -> dict:
    return gof.gof_report(dist.cdf, data, loglik, n_params).to_dict()


def cmd_fit(args) -> int:
    fam = Family.parse(args.family)
    data = read_dataset(args.data)
    if args.method == "em":
        fit = estimation.fit_em(
            fam, data, tol=args.tol, max_iter=args.max_iter, gamma=1.0 - args.level
        )
    else:
        fit = estimation.fit_direct(fam, data, gamma=1.0 - args.level, max_iter=args.max_iter)
    doc = fit.to_dict()
    doc["gof"] = _gof_dict(fit.dist, data, fit.loglik, 3)
    _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if fit.converged else EXIT_NOCONV


def cmd_gof(args) -> int:
    dist = _dist_from_args(args)
    data = read_dataset(args.data)
    loglik = estimation.log_likelihood(dist, data)
    doc = {
        "family": dist.family.name,
        "params": {"a": dist.a, "b": dist.b, "theta": dist.theta},
        **_gof_dict(dist, data, loglik, 3),
    }
    _write_text(args.out, json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _parse_sim_config(path: str) -> List[simstudy.SimConfig]:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from None
    if isinstance(raw, dict):
        raw = [raw]
    if not isinstance(raw, list) or not raw:
        raise ValueError("config must be one JSON object or a nonempty array")
    out = []
    for i, obj in enumerate(raw):
        try:
            out.append(
                simstudy.SimConfig(
                    family=Family.parse(obj["family"]),
                    a=float(obj["a"]),
                    b=float(obj["b"]),
                    theta=float(obj["theta"]),
                    n=int(obj["n"]),
                    reps=int(obj["reps"]),
                    seed=int(obj["seed"]),
                    tol=float(obj.get("tol", 1e-5)),
                    max_iter=int(obj.get("max_iter", 5000)),
                )
            )
        except (KeyError, TypeError, ValueError, DomainError) as exc:
            raise ValueError(f"config entry {i}: {exc}") from None
    return out


def cmd_simstudy(args) -> int:
    configs = _parse_sim_config(args.config)
    workers = args.threads if args.threads else (os.cpu_count() or 1)
    rows = simstudy.run_grid(configs, workers=workers)
    simstudy.write_csv(rows, args.out)
    return EXIT_OK if all(r.valid for r in rows) else EXIT_NOCONV


def cmd_curves(args) -> int:
    dist = _dist_from_args(args)
    if args.points < 2:
        raise ValueError("points must be >= 2")
    if args.x_max <= 0:
        raise ValueError("x-max must be positive")
    xs = np.linspace(0.0, args.x_max, args.points)
    pdf, cdfv, haz = dist.pdf(xs), dist.cdf(xs), dist.hazard(xs)
    lines = ["x,pdf,cdf,hazard"]
    for row in zip(xs, pdf, cdfv, haz):
        lines.append(",".join(_fmt(v) for v in row))
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_ttt(args) -> int:
    data = read_dataset(args.data)
    u, t = gof.ttt_transform(data)
    lines = ["u,ttt"]
    for ui, ti in zip(u[1:], t[1:]):  # drop the (0, 0) anchor in file output
        lines.append(f"{_fmt(ui)},{_fmt(ti)}")
    _write_text(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _add_family_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--family", required=True,
                   help="geometric|poisson|logarithmic|binomial:m|degenerate")
    p.add_argument("-a", type=float, required=True)
    p.add_argument("-b", type=float, required=True)
    p.add_argument("--theta", type=float, required=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lfrps",
        description="Linear failure rate power series lifetime model toolkit",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a reproducible sample")
    _add_family_params(p)
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="maximum-likelihood fit with GOF report")
    p.add_argument("data", help="dataset file, one value per line")
    p.add_argument("--family", required=True)
    p.add_argument("--method", choices=("em", "direct"), default="em")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--level", type=float, default=0.95,
                   help="confidence level for the intervals")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("gof", help="goodness of fit at fixed parameters")
    p.add_argument("data")
    _add_family_params(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("simstudy", help="run a Monte Carlo grid from a JSON config")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=0,
                   help="worker processes; 0 = available parallelism")
    p.set_defaults(func=cmd_simstudy)

    p = sub.add_parser("curves", help="emit pdf/cdf/hazard curve data")
    _add_family_params(p)
    p.add_argument("--x-max", type=float, required=True)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("ttt", help="scaled total time on test transform")
    p.add_argument("data")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_ttt)

    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
