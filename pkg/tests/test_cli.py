"""Tests for the command line, the runner and golden-bundle verification."""

import json
import logging
from unittest.mock import patch

import pytest

from symprotect.config import get_config
from symprotect.core.circuit import CircuitSpec
from symprotect.core.dynamics import ResonatorSpec
from symprotect.errors import BundleError, ConfigError, NumericalError, SpecError, SymmetryError
from symprotect.main import main, parse_arguments, parse_ratio_grid
from symprotect.runner import (
    EXIT_NUMERICAL,
    EXIT_USAGE,
    RunManifest,
    _matched_flux_scale,
    evaluate_check,
    exit_code_for,
    grid,
    run,
    run_command,
    verify,
)
from symprotect.utils import setup_logging
from symprotect.utils.output import file_digest

SPIN_CASE = {
    "name": "spin scan",
    "command": "spin-scan",
    "config": {
        "spin": {"M": 4, "t_GHz": 1.0},
        "spin_scan": {"axis1": {"name": "lam", "start": 0.0, "stop": 0.5, "step": 0.5}},
    },
    "checks": [{"file": "scan.csv", "row": 1, "column": "combined", "max": 1e-8}],
}


@pytest.fixture(autouse=True)
def isolated_user_config(tmp_path, monkeypatch):
    """Keep logs and user config out of the real home directory."""
    monkeypatch.setenv("XDG_CONFIG_HOME", str(tmp_path / "xdg"))


@pytest.fixture
def small_scan_config():
    config = get_config()
    config["spin"]["M"] = 4
    config["spin_scan"]["axis1"] = {"name": "lam", "start": 0.0, "stop": 0.5, "step": 0.25}
    config["run"]["threads"] = 1
    return config


def _write_bundle(path, cases):
    path.write_text(json.dumps({"cases": cases}))
    return path


def test_parse_arguments():
    """Test command line argument parsing."""
    args = parse_arguments(["--no-console", "run", "spin-scan", "--seed", "4", "--set", "spin.M=6"])

    assert args.action == "run"
    assert args.command == "spin-scan"
    assert args.seed == 4
    assert args.overrides == ["spin.M=6"]
    assert args.log_level == "INFO"


def test_parse_ratio_grid():
    """lambda/t bounds are scaled by t."""
    axis = parse_ratio_grid("0:1.5:0.5", 2.0)

    assert axis == {"name": "lam", "start": 0.0, "stop": 3.0, "step": 1.0}
    with pytest.raises(ConfigError):
        parse_ratio_grid("0:1.5", 1.0)


def test_grid_is_inclusive():
    assert list(grid({"start": 0.0, "stop": 1.0, "step": 0.25})) == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(ConfigError):
        grid({"name": "lam", "start": 1.0, "stop": 0.0, "step": 0.1})


def test_exit_codes():
    assert exit_code_for(ConfigError("x")) == EXIT_USAGE
    assert exit_code_for(SpecError("x")) == EXIT_USAGE
    assert exit_code_for(NumericalError("x")) == EXIT_NUMERICAL
    assert exit_code_for(SymmetryError("x")) == EXIT_NUMERICAL


def test_run_command_writes_manifest(tmp_path, small_scan_config):
    """The manifest records the seed and a digest of every output."""
    manifest = run_command("spin-scan", small_scan_config, tmp_path)
    stored = RunManifest.load(tmp_path / "manifest.json")

    assert stored.command == "spin-scan"
    assert stored.master_seed == 0
    assert stored.summary["n_points"] == 3
    assert stored.outputs["scan.csv"] == file_digest(tmp_path / "scan.csv")
    assert set(manifest.outputs) == {"scan.csv", "summary.json"}


def test_reruns_are_bitwise_identical(tmp_path, small_scan_config):
    first = run_command("spin-scan", small_scan_config, tmp_path / "a")
    second = run_command("spin-scan", small_scan_config, tmp_path / "b")

    assert first.outputs == second.outputs


def test_run_maps_numerical_failure_to_exit_code(tmp_path, small_scan_config, capsys):
    """A numerical failure returns 3 and leaves error.json behind."""
    with patch("symprotect.runner.phase_scan", side_effect=NumericalError("solver diverged")):
        code = run("spin-scan", small_scan_config, tmp_path)

    payload = json.loads((tmp_path / "error.json").read_text())
    assert code == EXIT_NUMERICAL
    assert payload["error"] == "numerical"
    assert "solver diverged" in capsys.readouterr().out


def test_main_rejects_unknown_config_key(tmp_path):
    """Unknown keys exit with 2 and name the key in error.json."""
    with pytest.raises(SystemExit) as excinfo:
        main(["--no-console", "run", "spin-scan", "--set", "spin.bogus=1", "--output-dir", str(tmp_path)])

    payload = json.loads((tmp_path / "error.json").read_text())
    assert excinfo.value.code == EXIT_USAGE
    assert payload["error"] == "config"
    assert payload["keys"] == ["spin.bogus"]


def test_main_runs_spin_scan(tmp_path):
    with pytest.raises(SystemExit) as excinfo:
        main([
            "--no-console", "run", "spin-scan", "--M", "4", "--lambda-over-t", "0:0.5:0.5",
            "--output-dir", str(tmp_path),
        ])

    assert excinfo.value.code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["n_points"] == 2
    assert summary["protected_intervals"] == [[0.5, 0.5]]


def test_evaluate_check_reports_diff(tmp_path):
    (tmp_path / "out.json").write_text(json.dumps({"a": {"b": 1.05}}))

    assert evaluate_check(tmp_path, {"file": "out.json", "path": "a.b", "expected": 1.0, "rtol": 0.1}) is None
    diff = evaluate_check(tmp_path, {"file": "out.json", "path": "a.b", "expected": 1.0, "rtol": 0.01})
    assert "expected 1.0" in diff
    assert "could not read" in evaluate_check(tmp_path, {"file": "out.json", "path": "a.c", "max": 1})


def test_verify_bundle(tmp_path):
    """Passing, failing and unknown-command cases are reported separately."""
    failing = dict(SPIN_CASE, name="too strict", checks=[
        {"file": "summary.json", "path": "n_points", "expected": 3}
    ])
    unknown = {"name": "mystery", "command": "teleport", "checks": []}
    bundle = _write_bundle(tmp_path / "bundle.json", [SPIN_CASE, failing, unknown])

    report = verify(bundle, get_config(), tmp_path / "out")
    statuses = {case.name: case.status for case in report.cases}

    assert statuses == {"spin scan": "pass", "too strict": "fail", "mystery": "config_error"}
    assert not report.passed
    assert (tmp_path / "out" / "verify_report.json").exists()


def test_verify_missing_bundle(tmp_path):
    with pytest.raises(BundleError):
        verify(tmp_path / "absent.json", get_config())


def test_main_verify_exit_codes(tmp_path):
    """verify exits 0 when every case passes and 2 for a missing bundle."""
    bundle = _write_bundle(tmp_path / "bundle.json", [SPIN_CASE])

    with pytest.raises(SystemExit) as passed:
        main(["--no-console", "verify", str(bundle)])
    with pytest.raises(SystemExit) as missing:
        main(["--no-console", "verify", str(tmp_path / "absent.json")])

    assert passed.value.code == 0
    assert missing.value.code == EXIT_USAGE


def test_setup_logging_writes_file(tmp_path):
    """Records go to the requested file with the module name."""
    log_file = tmp_path / "run.log"
    setup_logging(level="DEBUG", log_file=log_file, console=False)
    logging.getLogger("symprotect.core.circuit").info("f01 = 818.000 MHz")
    for handler in logging.getLogger().handlers:
        handler.flush()

    text = log_file.read_text()
    assert "symprotect.core.circuit - INFO - f01 = 818.000 MHz" in text


def test_initialization_ramp_targets_fixed_flux_scale():
    """The ramp goes to 1.17 Phi_opt unless the resonance search is switched on."""
    settings = dict(get_config()["dynamics"]["initialization"])
    resonator = ResonatorSpec()
    with patch("symprotect.runner.flux_response_table") as table:
        assert _matched_flux_scale(CircuitSpec(n_max=2), resonator, settings, 1) == pytest.approx(1.17)
        table.assert_not_called()

        table.return_value.resonant_fraction.return_value = 0.5
        settings["match_resonator"] = True
        assert _matched_flux_scale(CircuitSpec(n_max=2), resonator, settings, 1) == pytest.approx(1.2)
        table.assert_called_once()
