"""
End-to-end tests of the command-line interface and the scenario runner.
"""

import json

import numpy as np
import pandas as pd
import pytest
import yaml

from vibronic_sync.cli import build_parser, main, resolve_scenario
from vibronic_sync.config import apply_overrides
from vibronic_sync.presets import preset
from vibronic_sync.runner import EIGENMODE_MIN_COUPLING, ScenarioRunner
from vibronic_sync.utils import file_sha256

QUICK = [
    "--preset", "pe545",
    "--m-levels", "1",
    "--t-end", "0.12",
    "--set", "outputs.spectrum_times=[0.02]",
    "--set", "outputs.spectrum_horizon=null",
]


@pytest.fixture
def app_config_file(tmp_path, app_config):
    path = tmp_path / "application.yaml"
    path.write_text(yaml.safe_dump(app_config))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_presets_listing(capsys):
    assert run_cli("presets") == 0
    out = capsys.readouterr().out
    for name in ("pe545", "delocalised", "detuned", "swapped-rates"):
        assert name in out


def test_flag_overrides():
    args = build_parser().parse_args(["coherences", "--preset", "detuned", "--window", "0.05", "--m-levels", "3"])
    config = resolve_scenario(args, {})
    assert config.propagation.t_end == 5.0
    assert config.sync_window == 0.05
    assert config.params.m_levels == 3
    assert [kind.value for kind in config.outputs.artefacts] == ["trajectory", "coherences"]
    args = build_parser().parse_args(["spectrum", "--t-end", "1.0", "--at", "0.2", "0.5"])
    config = resolve_scenario(args, {"default_preset": "delocalised"})
    assert config.name == "delocalised"
    assert config.outputs.spectrum_times == [0.2, 0.5]


def test_config_errors_exit_with_one(tmp_path):
    assert run_cli("--no-registry", "simulate", "--preset", "nonexistent") == 1
    assert run_cli("--no-registry", "simulate", "--config", tmp_path / "missing.yaml") == 1
    bad = tmp_path / "bad.yaml"
    bad.write_text("params:\n  colour: red\n")
    assert run_cli("--no-registry", "simulate", "--config", bad) == 1


def test_zero_horizon_writes_nothing(tmp_path):
    out = tmp_path / "run"
    assert run_cli("--no-registry", "simulate", "--preset", "pe545", "--t-end", "0", "--out", out) == 1
    assert not out.exists()


def test_spectrum_time_past_horizon_removes_outputs(tmp_path):
    out = tmp_path / "run"
    code = run_cli("--no-registry", "spectrum", "--preset", "pe545", "--m-levels", "1",
                   "--t-end", "0.1", "--at", "6.0", "--out", out)
    assert code == 1
    assert not out.exists() or not any(out.iterdir())


def test_simulate_writes_artefacts_and_manifest(tmp_path, capsys):
    out = tmp_path / "run"
    assert run_cli("--no-registry", "simulate", *QUICK, "--out", out) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["sync_window_ps"] == pytest.approx(0.03, abs=0.001)

    trajectory = pd.read_csv(out / "trajectory.csv")
    assert list(trajectory.columns[:5]) == ["t_ps", "X1", "X2", "popE1", "popE2"]
    assert len(trajectory) == 121
    sync = pd.read_csv(out / "sync.csv")
    assert sync["C"].abs().max() <= 1.0
    spectrum = pd.read_csv(out / "spectrum_0.02.csv")
    assert list(spectrum.columns) == ["freq_cm1", "re_ft_X1", "re_ft_X2"]
    coherences = pd.read_csv(out / "coherences.csv")
    assert 0 < len(coherences) <= 7

    manifest = json.loads((out / "manifest.json").read_text())
    listed = {entry["file"]: entry["sha256"] for entry in manifest["outputs"]}
    assert set(listed) == {"trajectory.csv", "sync.csv", "spectrum_0.02.csv", "coherences.csv"}
    for name, digest in listed.items():
        assert file_sha256(out / name) == digest
    assert manifest["config"]["params"]["m_levels"] == 1
    assert manifest["audit"]["max_trace_drift"] < 1e-8
    assert "propagation" in manifest["timings_s"]


def test_outputs_are_deterministic(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    for out in (first, second):
        assert run_cli("--no-registry", "sync", *QUICK, "--out", out) == 0
    for name in ("trajectory.csv", "sync.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_plots_are_listed_in_manifest(tmp_path):
    out = tmp_path / "run"
    assert run_cli("--no-registry", "simulate", *QUICK, "--plot", "--drop-smallest", "2", "--out", out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    files = {entry["file"] for entry in manifest["outputs"]}
    assert {"fig_sync.png", "fig_populations.png", "fig_coherences.png", "fig_spectrum_0.02.png"} <= files


def test_table2_strict(capsys, tmp_path):
    assert run_cli("table2", "--strict", "--out", tmp_path) == 0
    out = capsys.readouterr().out
    assert "35/35 cells within tolerance" in out
    assert (tmp_path / "table2.txt").read_text() == out


def test_table2_strict_failure_exit_code(monkeypatch, capsys):
    from vibronic_sync import runner
    from vibronic_sync.presets import TableCell

    def failing(rows, reference=None):
        return [TableCell(row.pair, quantity, 0.0, 1.0, False)
                for row in rows for quantity in ("omega_kj", "x1", "x2", "sigma_x", "p00")]

    monkeypatch.setattr(runner, "compare_table2", failing)
    assert run_cli("table2") == 0
    assert run_cli("table2", "--strict") == 3
    assert "FAIL" in capsys.readouterr().out


def test_table2_without_reference(capsys):
    assert run_cli("table2", "--preset", "detuned", "--strict") == 0
    out = capsys.readouterr().out
    assert "cells within tolerance" not in out


def test_eigenmodes_command(tmp_path, capsys):
    assert run_cli("eigenmodes", "--m-levels", "1", "--set", "outputs.eigenmode_m=1", "--top-k", "20",
                   "--out", tmp_path) == 0
    document = json.loads((tmp_path / "eigenmodes.json").read_text())
    assert document["truncation_m"] == 1
    assert "slowest oscillatory mode" in capsys.readouterr().out


def test_eigenmodes_command_uses_coupling_threshold(tmp_path, app_config, capsys):
    app_config["numerics"]["eigenmode_min_coupling"] = 1e6
    path = tmp_path / "application.yaml"
    path.write_text(yaml.safe_dump(app_config))
    assert run_cli("--app-config", path, "eigenmodes", "--m-levels", "1", "--set", "outputs.eigenmode_m=1",
                   "--top-k", "4") == 0
    assert "slowest oscillatory mode" not in capsys.readouterr().out


def test_runner_slowest_mode_matches_report_threshold(app_config):
    runner = ScenarioRunner(app_config, use_registry=False)
    config = apply_overrides(preset("pe545"), {"params.m_levels": 1, "outputs.eigenmode_m": 1})
    report = runner.eigenmodes(config)
    mode = runner.slowest_mode(report)
    assert mode == report.slowest_oscillatory(min_coupling=EIGENMODE_MIN_COUPLING)
    assert mode is None or mode.coupling >= EIGENMODE_MIN_COUPLING


def test_spectrum_horizon_extends_only_the_ft_windows(app_config):
    config = apply_overrides(preset("pe545"), {
        "params.m_levels": 1,
        "propagation.t_end": 0.05,
        "outputs.spectrum_times": [0.02],
        "outputs.spectrum_horizon": 0.12,
    })
    result = ScenarioRunner(app_config, use_registry=False).simulate(config)
    assert result.trajectory.times[-1] == pytest.approx(0.05)
    assert len(result.trajectory.observables["X1"]) == 51
    assert result.sync.times[-1] <= 0.05 + 1e-12
    assert result.spectra[0.02].window == pytest.approx((0.02, 0.12))
    assert all(track.times[-1] == pytest.approx(0.05) for track in result.tracks)


def test_spectrum_horizon_is_ignored_without_spectra(app_config):
    config = apply_overrides(preset("pe545"), {
        "params.m_levels": 1,
        "propagation.t_end": 0.05,
        "outputs.artefacts": ["trajectory", "sync"],
        "outputs.spectrum_times": [0.5],
    })
    result = ScenarioRunner(app_config, use_registry=False).simulate(config)
    assert result.spectra == {}
    assert result.trajectory.times[-1] == pytest.approx(0.05)


def test_calibrate_sync(tmp_path, capsys):
    assert run_cli("calibrate-sync", "--points", "7", "--out", tmp_path, "--plot") == 0
    curve = pd.read_csv(tmp_path / "calibration.csv")
    assert curve["C"].iloc[0] == pytest.approx(1.0, abs=1e-6)
    assert curve["C"].iloc[-1] == pytest.approx(-1.0, abs=1e-6)
    assert (tmp_path / "fig_calibration.png").exists()
    assert run_cli("calibrate-sync", "--window-choice", "inverse-angular", "--points", "5") == 0
    assert run_cli("calibrate-sync", "--points", "1") == 1


def test_sweep_records_failures(tmp_path, app_config_file):
    out = tmp_path / "sweep"
    code = run_cli("--app-config", app_config_file, "sweep", *QUICK, "--axis", "g1",
                   "--values", "267.1,-5", "--workers", "1", "--out", out)
    assert code == 0
    table = pd.read_csv(out / "sweep.csv")
    assert list(table["status"]) == ["success", "failed"]
    assert table["et_amplitude"].iloc[0] == pytest.approx(0.755, abs=0.01)
    assert run_cli("--app-config", app_config_file, "sweep", *QUICK, "--axis", "colour", "--values", "1") == 1


def test_sweep_records_linear_algebra_failures(monkeypatch, app_config):
    original = ScenarioRunner.simulate

    def singular_at_1500(self, config):
        if config.params.omega1 == 1500.0:
            raise np.linalg.LinAlgError("Singular matrix")
        return original(self, config)

    monkeypatch.setattr(ScenarioRunner, "simulate", singular_at_1500)
    base = apply_overrides(preset("pe545"), {"params.m_levels": 1, "propagation.t_end": 0.05})
    table = ScenarioRunner(app_config, use_registry=False).sweep(base, "omega1", [1111.0, 1500.0], workers=1)
    assert list(table["status"]) == ["success", "failed"]
    assert table["message"].iloc[1] == "LinAlgError: Singular matrix"
    assert table["sync_onset"].isna().iloc[1]


def test_registry_records_runs(tmp_path, app_config_file, capsys):
    out = tmp_path / "run"
    assert run_cli("--app-config", app_config_file, "sync", *QUICK, "--out", out) == 0
    assert run_cli("--app-config", app_config_file, "simulate", "--preset", "pe545", "--t-end", "0",
                   "--out", tmp_path / "never") == 1
    capsys.readouterr()
    assert run_cli("--app-config", app_config_file, "runs") == 0
    listing = capsys.readouterr().out
    assert "pe545" in listing and "success" in listing
