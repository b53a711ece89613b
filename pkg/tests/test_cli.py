"""Command-line surface: exit codes, file formats, schema conformance."""

import json
import math
from importlib import resources

import numpy as np
import pytest

from lfrps import Family, LfrpsDist
from lfrps.cli import EXIT_INPUT, EXIT_NOCONV, EXIT_OK, main, read_dataset


def _schema_registry():
    import referencing
    from referencing.jsonschema import DRAFT202012

    reg = referencing.Registry()
    for name in ("fit_report.schema.json", "gof_report.schema.json"):
        raw = json.loads(
            resources.files("lfrps").joinpath("schemas", name).read_text()
        )
        reg = reg.with_resource(name, referencing.Resource.from_contents(raw, DRAFT202012))
    return reg


def _validate(doc, schema_name):
    import jsonschema

    reg = _schema_registry()
    schema = reg.contents(schema_name)
    jsonschema.validate(doc, schema, registry=reg)


def run(args):
    return main(args)


def test_sample_roundtrip(tmp_path):
    out = tmp_path / "s.csv"
    args = ["sample", "--family", "geometric", "-a", "1.0", "-b", "0.5",
            "--theta", "0.4", "-n", "50", "--seed", "3", "--out", str(out)]
    assert run(args) == EXIT_OK
    text1 = out.read_bytes()
    assert run(args) == EXIT_OK
    assert out.read_bytes() == text1  # byte-identical rerun
    vals = read_dataset(str(out))
    assert vals.size == 50
    expect = LfrpsDist(1.0, 0.5, 0.4, Family.geometric()).sample(50, 3)
    np.testing.assert_allclose(vals, expect, rtol=1e-15)


def test_sample_mean_geometric_exponential(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["sample", "--family", "geometric", "-a", "1", "-b", "0",
                "--theta", "0.5", "-n", "100000", "--seed", "1",
                "--out", str(out)]) == EXIT_OK
    vals = read_dataset(str(out))
    assert vals.mean() == pytest.approx(math.log(2.0), abs=0.01)


def test_sample_domain_error():
    assert run(["sample", "--family", "geometric", "-a", "1", "-b", "0",
                "--theta", "1.5", "-n", "5", "--seed", "1"]) == EXIT_INPUT


def test_dataset_header_autodetect(tmp_path):
    f = tmp_path / "d.csv"
    f.write_text("lifetime\n1.5\n2.5\n")
    np.testing.assert_array_equal(read_dataset(str(f)), [1.5, 2.5])
    f.write_text("1.5\n2.5\n")
    np.testing.assert_array_equal(read_dataset(str(f)), [1.5, 2.5])
    f.write_text("lifetime\n")
    with pytest.raises(ValueError):
        read_dataset(str(f))
    f.write_text("1.0\n-2.0\n")
    with pytest.raises(ValueError):
        read_dataset(str(f))


def _write_sample(tmp_path, n=400, seed=13):
    data = tmp_path / "data.csv"
    assert run(["sample", "--family", "geometric", "-a", "0.3", "-b", "0.3",
                "--theta", "0.2", "-n", str(n), "--seed", str(seed),
                "--out", str(data)]) == EXIT_OK
    return data


def test_fit_em_and_direct_agree(tmp_path):
    data = _write_sample(tmp_path, n=2000, seed=17)
    docs = {}
    for method in ("em", "direct"):
        out = tmp_path / f"fit_{method}.json"
        code = run(["fit", str(data), "--family", "geometric",
                    "--method", method, "--tol", "1e-8",
                    "--max-iter", "50000", "--out", str(out)])
        assert code == EXIT_OK
        docs[method] = json.loads(out.read_text())
    for doc in docs.values():
        _validate(doc, "fit_report.schema.json")
        assert doc["converged"]
    for p in ("a", "b", "theta"):
        assert docs["em"]["estimates"][p] == pytest.approx(
            docs["direct"]["estimates"][p], abs=1e-3
        )


def test_fit_report_fields(tmp_path):
    data = _write_sample(tmp_path)
    out = tmp_path / "fit.json"
    assert run(["fit", str(data), "--family", "geometric", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    _validate(doc, "fit_report.schema.json")
    assert doc["method"] == "em"
    assert doc["gof"]["n_obs"] == 400
    lo, hi = doc["ci"]["a"]
    assert lo < doc["estimates"]["a"] < hi


def test_fit_nonconvergence_exit_code(tmp_path):
    data = _write_sample(tmp_path)
    out = tmp_path / "fit.json"
    code = run(["fit", str(data), "--family", "geometric",
                "--max-iter", "2", "--out", str(out)])
    assert code == EXIT_NOCONV
    doc = json.loads(out.read_text())  # document still written
    assert not doc["converged"]


def test_fit_empty_file(tmp_path):
    f = tmp_path / "empty.csv"
    f.write_text("")
    assert run(["fit", str(f), "--family", "geometric"]) == EXIT_INPUT


def test_gof_command(tmp_path):
    data = _write_sample(tmp_path)
    out = tmp_path / "gof.json"
    assert run(["gof", str(data), "--family", "geometric", "-a", "0.3",
                "-b", "0.3", "--theta", "0.2", "--out", str(out)]) == EXIT_OK
    doc = json.loads(out.read_text())
    _validate(doc, "gof_report.schema.json")
    assert doc["aic"] == pytest.approx(-2.0 * doc["loglik"] + 6.0, abs=1e-9)


def test_curves_degenerate(tmp_path):
    out = tmp_path / "c.csv"
    assert run(["curves", "--family", "degenerate", "-a", "1", "-b", "0",
                "--theta", "1", "--x-max", "3", "--points", "7",
                "--out", str(out)]) == EXIT_OK
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "x,pdf,cdf,hazard"
    rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
    assert len(rows) == 7
    for row in rows:
        assert row[3] == pytest.approx(1.0, abs=1e-14)  # constant hazard
    # pdf at x=0 equals theta a C'(theta)/C(theta)
    fam = Family.geometric()
    out2 = tmp_path / "c2.csv"
    assert run(["curves", "--family", "geometric", "-a", "0.8", "-b", "0.4",
                "--theta", "0.6", "--x-max", "2", "--points", "5",
                "--out", str(out2)]) == EXIT_OK
    first = list(map(float, out2.read_text().strip().split("\n")[1].split(",")))
    expect = 0.6 * 0.8 * fam.c(0.6, 1) / fam.c(0.6)
    assert first[1] == pytest.approx(expect, rel=1e-12)


def test_curves_bad_points():
    assert run(["curves", "--family", "geometric", "-a", "1", "-b", "0",
                "--theta", "0.5", "--x-max", "2", "--points", "1"]) == EXIT_INPUT


def test_ttt_command(tmp_path):
    data = tmp_path / "d.csv"
    data.write_text("1\n2\n")
    out = tmp_path / "t.csv"
    assert run(["ttt", str(data), "--out", str(out)]) == EXIT_OK
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "u,ttt"
    rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
    assert rows[0] == pytest.approx([0.5, 2.0 / 3.0])
    assert rows[1] == pytest.approx([1.0, 1.0])


def test_simstudy_command(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "family": "geometric", "a": 0.3, "b": 0.3, "theta": 0.2,
        "n": 50, "reps": 6, "seed": 11,
    }))
    out1, out2 = tmp_path / "r1.csv", tmp_path / "r2.csv"
    assert run(["simstudy", str(cfg), "--out", str(out1), "--threads", "1"]) == EXIT_OK
    assert run(["simstudy", str(cfg), "--out", str(out2), "--threads", "2"]) == EXIT_OK
    assert out1.read_bytes() == out2.read_bytes()


def test_simstudy_bad_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[]")
    assert run(["simstudy", str(cfg), "--out", str(tmp_path / "x.csv")]) == EXIT_INPUT
    cfg.write_text("{\"family\": \"geometric\"}")
    assert run(["simstudy", str(cfg), "--out", str(tmp_path / "x.csv")]) == EXIT_INPUT
