"""Command line: exit codes, golden files, reports and plots."""
import json

import pytest

from opcalc import cli, runner
from opcalc.suites import SuiteResult

SMALL = {"N": 16, "Nv": 64, "V": 8.0}


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(SMALL))
    return str(p)


def test_bad_config_key(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"nope": 1}))
    assert cli.main(["tg", "sobolev", "--config", str(p), "--out", str(tmp_path / "o")]) == 2
    assert "unknown config keys" in capsys.readouterr().err


@pytest.mark.parametrize("cfg", [{"N": 17}, {"Nv": 32}, {"seed": -1}, {"heisenberg_Ns": [7]}])
def test_bad_config_values(tmp_path, cfg):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    assert cli.main(["leibniz", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_unreadable_config(tmp_path):
    assert cli.main(["leibniz", "--config", str(tmp_path / "missing.json")]) == 2
    p = tmp_path / "list.json"
    p.write_text("[1, 2]")
    assert cli.main(["leibniz", "--config", str(p)]) == 2


def test_bad_thread_env(tmp_path, small_config, monkeypatch):
    monkeypatch.setenv(runner.THREAD_ENV, "zero")
    assert cli.main(["tg", "sobolev", "--config", small_config, "--out", str(tmp_path / "o")]) == 2


def test_update_golden_needs_golden(tmp_path, small_config):
    assert cli.main(["tg", "sobolev", "--config", small_config, "--update-golden"]) == 2


def test_golden_roundtrip_and_mismatch(tmp_path, small_config):
    out, gold = str(tmp_path / "o"), tmp_path / "gold"
    args = ["tg", "sobolev", "--config", small_config, "--out", out, "--no-plots", "--golden", str(gold)]
    assert cli.main(args + ["--update-golden"]) == 0
    assert cli.main(args) == 0
    f = gold / "tg-sobolev.csv"
    lines = f.read_text().splitlines()
    # corrupt the value column of the first record
    cells = lines[2].split(",")
    cells[2] = "12345"
    lines[2] = ",".join(cells)
    f.write_text("\n".join(lines) + "\n")
    assert cli.main(args) == 3


def test_missing_golden_file(tmp_path, small_config):
    gold = tmp_path / "gold"
    gold.mkdir()
    args = ["tg", "sobolev", "--config", small_config, "--out", str(tmp_path / "o"), "--no-plots",
            "--golden", str(gold)]
    assert cli.main(args) == 3


def test_report_files_and_plots(tmp_path, small_config):
    out = tmp_path / "o"
    assert cli.main(["tg", "sobolev", "--config", small_config, "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["passed"] and rep["config"]["N"] == 16
    assert (out / "tg-sobolev__dirac_mode_sums.csv").exists()
    assert sorted(p.name for p in (out / "plots").iterdir()) == [
        "tg-sobolev__dirac_mode_sums.svg", "tg-sobolev__sobolev_ratios.svg"]


def test_config_hash_ignores_out():
    a = runner.ExperimentConfig(out="x")
    b = runner.ExperimentConfig(out="y")
    assert a.hash() == b.hash()
    assert a.hash() != runner.ExperimentConfig(seed=1).hash()


def _fake_report(expected_fail):
    res = SuiteResult("leibniz")
    res.check("ok", "plumbing", 0.0, 1.0)
    res.check("control", "plumbing", 5.0, 1.0, expected_fail=expected_fail)
    return runner.RunReport(runner.ExperimentConfig(module="leibniz"), [res], {"leibniz": 0.0}, {})


@pytest.mark.parametrize("expected_fail, code", [(True, 0), (False, 1)])
def test_failing_control_does_not_fail_run(tmp_path, monkeypatch, capsys, expected_fail, code):
    monkeypatch.setattr(cli, "run", lambda cfg: _fake_report(expected_fail))
    assert cli.main(["leibniz", "--out", str(tmp_path), "--no-plots"]) == code
    line = [l for l in capsys.readouterr().out.splitlines() if l.split()[1:2] == ["control"]][0]
    assert line.endswith("FAIL (expected)" if expected_fail else "FAIL")


def test_empty_report_has_no_plots(tmp_path):
    report = runner.RunReport(runner.ExperimentConfig(), [], {}, {})
    runner.emit_plots(report, tmp_path / "plots")
    assert not (tmp_path / "plots").exists() or not any((tmp_path / "plots").iterdir())


def test_csv_formatting():
    assert runner.fmt(1 / 3) == "0.333333"
    assert runner.fmt(True) == "true"
    assert runner.fmt((1.0, 2.5)) == "1;2.5"
    assert runner.fmt(float("inf")) == "inf"


def test_golden_cells_tolerance():
    assert runner._cells_match("1.000000", "1.0000001")
    assert not runner._cells_match("1.0", "1.1")
    assert runner._cells_match("nan", "nan")
    assert runner._cells_match("gauss", "gauss")
