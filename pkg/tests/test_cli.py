import csv
import json

import pytest

from fracnls.cli import main


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--output-dir", str(out)])
    return code, out


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_solve_writes_artifacts(tmp_path, capsys):
    code, out = run(tmp_path, "a", "solve", "--s", "0.7", "--omega", "1.8", "--n-modes", "1024")
    assert code == 0
    m = manifest(out)
    assert m["command"] == "solve" and m["artifact_paths"] == ["profile.json", "profile.csv"]
    assert m["parameters"]["omega"] == 1.8
    rec = json.loads((out / "profile.json").read_text())
    assert rec["residual_norm"] <= 1e-6 and len(rec["values"]) == 1024
    assert "certified" in capsys.readouterr().out


def test_refuses_non_empty_dir_without_force(tmp_path):
    args = ("solve", "--s", "1", "--omega", "1.5", "--n-modes", "256")
    assert run(tmp_path, "a", *args)[0] == 0
    assert run(tmp_path, "a", *args)[0] == 3
    assert run(tmp_path, "a", *args, "--force")[0] == 0


@pytest.mark.parametrize(
    "args, code",
    [
        (("solve", "--s", "1", "--omega", "0.9", "--n-modes", "256"), 2),
        (("solve", "--s", "1.5", "--omega", "1.5"), 3),
        (("solve", "--s", "0.2", "--omega", "1.5"), 3),
        (("solve", "--omega", "1.5"), 3),
        (("solve", "--s", "1", "--omega", "1.5", "--n-modes", "100"), 3),
        (("validate-exact", "--omega", "0.9"), 3),
        (("sweep", "--s-list", "0.5", "--omega-min", "2", "--omega-max", "1.5", "--omega-step", "0.1"), 3),
        (("spectrum", "--s", "1", "--omega", "1.5", "--n-modes", "256", "--basis-cutoff", "500"), 3),
    ],
)
def test_exit_codes(tmp_path, args, code):
    assert run(tmp_path, "x", *args)[0] == code


def test_deterministic_output(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    args = ("krein", "--s", "0.5", "--omega", "1.5", "--n-modes", "1024")
    _, a = run(tmp_path, "a", *args)
    _, b = run(tmp_path, "b", *args)
    assert (a / "krein_report.json").read_bytes() == (b / "krein_report.json").read_bytes()
    ma, mb = manifest(a), manifest(b)
    assert ma["timestamp"] == mb["timestamp"] == "2023-11-14T22:13:20+00:00"
    args = ("solve", "--s", "0.5", "--omega", "1.5", "--n-modes", "1024")
    _, a = run(tmp_path, "c", *args)
    _, b = run(tmp_path, "d", *args)
    for name in ("profile.json", "profile.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_krein_report(tmp_path, capsys):
    code, out = run(tmp_path, "k", "krein", "--s", "1", "--omega", "1.5", "--n-modes", "1024")
    assert code == 0
    rec = json.loads((out / "krein_report.json").read_text())
    assert rec["v_odd"] > 0 and rec["v_even"] < 0
    assert rec["verdict"] in {"spectrally_unstable", "inconclusive", "stable_candidate"}
    text = capsys.readouterr().out
    assert "verdict" in text and rec["verdict"] in text


def test_spectrum(tmp_path):
    code, out = run(tmp_path, "sp", "spectrum", "--s", "1", "--omega", "1.5", "--n-modes", "1024")
    assert code == 0
    rec = json.loads((out / "spectrum.json").read_text())
    assert len(rec) >= 4 and all("eigenvalues" in r for r in rec)


def test_sweep_matches_single_cell(tmp_path):
    code, out = run(
        tmp_path, "sw", "sweep", "--s-list", "0.5", "--omega-min", "1.5", "--omega-max", "1.5",
        "--omega-step", "0.1", "--n-modes", "1024",
    )
    assert code == 0
    with (out / "sweep_s0.5.csv").open() as fh:
        (row,) = list(csv.DictReader(fh))
    _, k = run(tmp_path, "k", "krein", "--s", "0.5", "--omega", "1.5", "--n-modes", "1024")
    rec = json.loads((k / "krein_report.json").read_text())
    assert row["verdict"] == rec["verdict"]
    assert float(row["v_odd"]) == pytest.approx(rec["v_odd"], rel=1e-10)
    assert float(row["v_even"]) == pytest.approx(rec["v_even"], rel=1e-10)
    assert manifest(out)["artifact_paths"] == ["sweep_s0.5.csv", "sweep.json"]


@pytest.mark.parametrize("omega", [1.5, 1.05])
def test_validate_exact(tmp_path, omega):
    code, out = run(tmp_path, "v", "validate-exact", "--omega", str(omega), "--max-err", "1e-6")
    assert code == 0
    with (out / "validate_exact.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4096
    assert max(float(r["abs_diff"]) for r in rows) <= 1e-6


def test_validate_exact_reports_failure(tmp_path):
    code, _ = run(tmp_path, "v", "validate-exact", "--omega", "1.5", "--n-modes", "64", "--max-err", "1e-14")
    assert code == 4
