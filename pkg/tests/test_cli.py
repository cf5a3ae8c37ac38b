import json
import subprocess
import sys

import pytest

from qcurv.cli import main


def run_cli(args):
    return main(list(args))


def test_bubble_check_passes(tmp_path):
    out = tmp_path / "out"
    code = run_cli(["bubble-check", "--out", str(out), "--quiet"])
    assert code == 0
    summary = json.loads((out / "bubble-check.json").read_text())
    assert summary["pass"] is True
    assert set(summary) == {"command", "pass", "checks", "seed", "versions"}
    assert summary["command"] == "bubble-check"
    for c in summary["checks"]:
        assert set(c) == {"name", "value", "bound", "pass"}
    assert {"qcurv", "python", "numpy", "scipy", "sympy"} <= set(summary["versions"])


def test_unknown_command_is_usage_error(capsys):
    assert run_cli(["frobnicate"]) == 2
    capsys.readouterr()


def test_unknown_config_key_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[mass]\nbogus_key = 3\n")
    assert run_cli(["mass", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_config_section_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[nonsense]\nx = 1\n")
    assert run_cli(["mass", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    capsys.readouterr()


def test_non_decreasing_eps_list_is_usage_error(tmp_path, capsys):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[mainest]\neps_list = 0.01,0.1\n")
    assert run_cli(["mainest", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    capsys.readouterr()


def test_missing_config_file_is_usage_error(tmp_path, capsys):
    assert (
        run_cli(["mass", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "o")])
        == 2
    )
    capsys.readouterr()


def test_mass_default_fails_honestly(tmp_path):
    # the R = 10 default sits outside the stated band; the suite must
    # report the value faithfully and exit 1
    out = tmp_path / "out"
    code = run_cli(["mass", "--out", str(out), "--quiet"])
    assert code == 1
    summary = json.loads((out / "mass.json").read_text())
    names = {c["name"]: c for c in summary["checks"]}
    assert not names["mass_over_16pi2"]["pass"]
    assert 0.98 < names["mass_over_16pi2"]["value"] < 0.999
    # CSV sweep rows are still produced
    text = (out / "mass.csv").read_text().splitlines()
    assert "error_estimate" in text[0]
    assert len(text) > 2


def test_mass_wide_ball_passes(tmp_path):
    cfg = tmp_path / "cfg.ini"
    cfg.write_text("[mass]\nr = 20\n")
    out = tmp_path / "out"
    code = run_cli(["mass", "--config", str(cfg), "--out", str(out), "--quiet"])
    summary = json.loads((out / "mass.json").read_text())
    names = {c["name"]: c for c in summary["checks"]}
    assert names["mass_over_16pi2"]["pass"]
    assert code == 0


def test_longrange_outputs_and_determinism(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert run_cli(["longrange", "--out", str(out1), "--quiet"]) == 0
    assert run_cli(["longrange", "--out", str(out2), "--quiet"]) == 0
    assert (out1 / "longrange.json").read_bytes() == (out2 / "longrange.json").read_bytes()
    assert (out1 / "longrange.csv").read_bytes() == (out2 / "longrange.csv").read_bytes()


def test_vrate_passes(tmp_path):
    out = tmp_path / "out"
    assert run_cli(["vrate", "--out", str(out), "--quiet"]) == 0
    summary = json.loads((out / "vrate.json").read_text())
    names = {c["name"]: c for c in summary["checks"]}
    assert any("exponent" in n for n in names)


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "qcurv.cli", "longrange", "--out", str(tmp_path / "o"), "--quiet"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
