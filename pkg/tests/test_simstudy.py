"""Monte Carlo harness: determinism, aggregation, CSV schema."""

import math

import numpy as np
import pytest

from lfrps import Family, SimConfig, run_cell, run_grid
from lfrps.simstudy import CSV_COLUMNS, write_csv

GEO = Family.geometric()


def small_cell(**kw):
    base = dict(family=GEO, a=0.3, b=0.3, theta=0.2, n=60, reps=12, seed=99)
    base.update(kw)
    return SimConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        small_cell(n=2)
    with pytest.raises(ValueError):
        small_cell(reps=1)
    with pytest.raises(Exception):
        small_cell(theta=1.5)  # outside the geometric domain


def test_row_identities():
    row = run_cell(small_cell())
    assert row.failures + 12 - row.failures == 12
    for k, truth in enumerate((0.3, 0.3, 0.2)):
        assert row.bias[k] == pytest.approx(row.ae[k] - truth, abs=1e-15)
    assert all(s >= 0 for s in row.sim_std)
    assert all(s >= 0 for s in row.em_std)


def test_determinism_rerun():
    r1 = run_cell(small_cell())
    r2 = run_cell(small_cell())
    assert r1.ae == r2.ae
    assert r1.sim_std == r2.sim_std
    assert r1.em_cov == r2.em_cov


def test_determinism_across_workers():
    cfg = small_cell(reps=8, n=50)
    r1 = run_cell(cfg, workers=1)
    r2 = run_cell(cfg, workers=2)
    assert r1 == r2


def test_seed_changes_results():
    r1 = run_cell(small_cell())
    r2 = run_cell(small_cell(seed=100))
    assert r1.ae != r2.ae


def test_degenerate_cell_unbiased():
    cfg = SimConfig(family=Family.degenerate(), a=1.0, b=0.0, theta=1.0,
                    n=4000, reps=10, seed=5)
    row = run_cell(cfg)
    assert row.valid
    assert row.ae[0] == pytest.approx(1.0, abs=0.02)
    assert abs(row.bias[0]) < 0.02
    # theta is structurally unidentifiable here: its columns stay nan
    assert math.isnan(row.em_std[2])


def test_run_grid_order_and_empty():
    cfgs = [small_cell(seed=1), small_cell(seed=2)]
    rows = run_grid(cfgs)
    assert [r.config.seed for r in rows] == [1, 2]
    rows_rev = run_grid(cfgs[::-1])
    assert rows[0] == rows_rev[1]
    with pytest.raises(ValueError):
        run_grid([])


def test_invalid_cell_flag():
    # max_iter=1 makes every replication fail to converge
    row = run_cell(small_cell(max_iter=1))
    assert row.failures == 12
    assert not row.valid


def test_csv_output(tmp_path):
    rows = run_grid([small_cell(reps=5)])
    out = tmp_path / "grid.csv"
    write_csv(rows, out)
    lines = out.read_text().strip().split("\n")
    assert lines[0].split(",") == CSV_COLUMNS
    fields = lines[1].split(",")
    assert fields[0] == "geometric"
    assert len(fields) == len(CSV_COLUMNS)
    # rewrite is byte-identical
    out2 = tmp_path / "grid2.csv"
    write_csv(rows, out2)
    assert out.read_bytes() == out2.read_bytes()
