import csv
import json

import pytest

from onoff_privacy.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_rate_matches_published_series(capsys, tmp_path):
    out = tmp_path / "rate.csv"
    code, _, _ = run(
        capsys, "rate", "--alpha", "0.2", "--beta", "0.2", "--horizon", "20", "--out", str(out)
    )
    assert code == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 21
    assert float(rows[0]["rate"]) == 0.5
    assert abs(float(rows[1]["rate"]) - 0.625) < 1e-12
    assert abs(float(rows[4]["rate"]) - 0.885269121813031) < 1e-9
    for row in rows[1:]:
        assert abs(float(row["rate"]) - float(row["converse_bound"])) < 1e-9


def test_rate_degenerate_and_boundary(capsys):
    code, out, _ = run(capsys, "rate", "--alpha", "0", "--beta", "0", "--horizon", "5",
                       "--format", "json")
    assert code == 0
    assert all(row["rate"] == 0.5 for row in json.loads(out))
    code, out, _ = run(capsys, "rate", "--alpha", "0.5", "--beta", "0.5", "--horizon", "5",
                       "--format", "json")
    rows = json.loads(out)
    assert rows[0]["rate"] == 0.5
    assert all(row["rate"] == 1.0 for row in rows[1:])


def test_rate_with_monte_carlo(capsys):
    code, out, _ = run(
        capsys, "rate", "--alpha", "0.2", "--beta", "0.2", "--horizon", "3",
        "--runs", "20000", "--seed", "11", "--format", "json",
    )
    assert code == 0
    for row in json.loads(out):
        if row["t"] >= 1:
            assert abs(row["empirical_rate"] - row["rate"]) <= max(3 * row["empirical_se"], 1e-9)


def test_audit_scheme_passes(capsys, tmp_path):
    out = tmp_path / "report.json"
    code, _, _ = run(
        capsys, "audit", "--alpha", "0.2", "--beta", "0.2", "--mode", "step",
        "--horizon", "6", "--out", str(out),
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert doc["max_leakage"] <= 1e-10


def test_audit_naive_fails(capsys):
    code, out, _ = run(
        capsys, "audit", "--alpha", "0.2", "--beta", "0.2", "--policy", "naive", "--horizon", "3"
    )
    assert code == 1
    doc = json.loads(out)
    assert doc["passed"] is False
    assert doc["per_t"]["1"] > 0.2


def test_audit_never_on_pattern(capsys):
    code, out, _ = run(capsys, "audit", "--alpha", "0.2", "--beta", "0.2", "--mode", "NNNN")
    assert code == 0
    assert json.loads(out)["max_leakage"] == 0.0


def test_audit_horizon_cap_is_usage_error(capsys):
    code, _, err = run(capsys, "audit", "--alpha", "0.2", "--beta", "0.2", "--horizon", "20")
    assert code == 2
    assert "error" in err


def test_bad_model_is_usage_error(capsys):
    code, _, _ = run(capsys, "rate", "--alpha", "1.5", "--beta", "0.2")
    assert code == 2


def test_unknown_command_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_table_prints_table_i(capsys):
    code, out, _ = run(capsys, "table", "--alpha", "0.2", "--beta", "0.2")
    assert code == 0
    tables = json.loads(out)
    assert len(tables) == 1
    assert tables[0]["offset_parity"] == "lt1"
    assert tables[0]["rows"]["A,A"] == {"A": 0.25, "B": 0.0, "AB": 0.75}


def test_table_parity_regime_prints_both(capsys):
    code, out, _ = run(capsys, "table", "--alpha", "0.6", "--beta", "0.6")
    tables = json.loads(out)
    assert [t["offset_parity"] for t in tables] == ["odd", "even"]


def test_table_boundary(capsys):
    code, out, _ = run(capsys, "table", "--alpha", "0.5", "--beta", "0.5")
    tables = json.loads(out)
    assert len(tables) == 1 and tables[0]["offset_parity"] == "indep"
    assert tables[0]["rows"]["B,A"] == {"A": 1.0, "B": 0.0, "AB": 0.0}


def test_simulate_is_reproducible(capsys, tmp_path):
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--alpha", "0.2", "--beta", "0.2", "--runs", "1", "--seed", "7",
            "--horizon", "4"]
    assert main(args + ["--out", str(f1)]) == 0
    assert main(args + ["--out", str(f2)]) == 0
    capsys.readouterr()
    assert f1.read_bytes() == f2.read_bytes()
    rows = list(csv.DictReader(f1.open()))
    assert [r["time"] for r in rows] == ["-1", "0", "1", "2", "3", "4"]
    assert all(r["query"] == "AB" for r in rows[:2])


def test_simulate_summary_matches_theory(capsys):
    code, out, _ = run(
        capsys, "simulate", "--alpha", "0.3", "--beta", "0.2", "--mode", "NYNY",
        "--runs", "30000", "--seed", "3",
    )
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith("t=")]
    assert len(lines) == 4
    # OFF steps after the first ON follow the offset formula.
    fields = dict(kv.split("=") for kv in lines[2].split())
    assert abs(float(fields["empirical_rate"]) - 1 / 1.5) < 0.01
    assert float(fields["theory"]) == pytest.approx(1 / 1.5, abs=1e-6)
    assert "decodability: PASS" in out


def test_simulate_draws_and_prints_seed_when_omitted(capsys):
    code, out, err = run(capsys, "simulate", "--alpha", "0.2", "--beta", "0.2", "--runs", "2",
                         "--horizon", "2")
    assert code == 0
    assert "seed:" in err
