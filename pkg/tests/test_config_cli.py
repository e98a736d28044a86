import hashlib
import json
import math
from pathlib import Path

import numpy as np
import pytest

from conftest import quick_overrides
from switchmap.cli import run_cli
from switchmap.config import ConfigError, parse_config


def write_cfg(tmp_path, text, name="episode.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_empty_file_yields_reference_defaults(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, "# nothing here\n"))
    assert [s.intensity for s in cfg.field.sources] == [5.0, 5.0, 4.0, 4.0]
    assert [s.position for s in cfg.field.sources] == [(-2, 0), (2, 0), (0, 2), (0, -2)]
    assert cfg.field.sources[0].decay == 0.5
    assert np.array_equal(cfg.gains.k1, 3.0 * np.eye(3))
    assert np.array_equal(cfg.gains.k2, 3.0 * np.eye(3))
    assert cfg.bounds.v_upper == 0.2025
    assert cfg.bounds.v_lower == 1e-4
    assert cfg.weights == (0.2, 0.6, 0.2)
    assert cfg.dist_bound == 0.06
    assert cfg.geometry.gps_radius == 1.0
    assert cfg.path_radius == 2.0
    assert cfg.bounds.lambda_a == pytest.approx(5.0)
    assert cfg.bounds.lambda_u == pytest.approx(2.0)
    assert np.allclose(cfg.xhat0, [0.2, 0.3, math.pi / 6])


def test_cushion_validation_error(tmp_path):
    # 2*sqrt(0.25) equals the GPS radius, leaving no room for the cushion
    with pytest.raises(ConfigError, match="cushion"):
        parse_config(write_cfg(tmp_path, "V_u = 0.25\n"))


def test_gain_validation_error(tmp_path):
    with pytest.raises(ConfigError, match="k1"):
        parse_config(write_cfg(tmp_path, "k1 = 0.4\n"))


def test_unknown_key_reports_line(tmp_path):
    path = write_cfg(tmp_path, "seed = 1\nnot_a_key = 2\n")
    with pytest.raises(ConfigError, match=r"episode\.cfg:2.*not_a_key"):
        parse_config(path)


def test_duplicate_key_rejected(tmp_path):
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config(write_cfg(tmp_path, "seed = 1\nseed = 2\n"))


def test_bad_value_reports_line(tmp_path):
    with pytest.raises(ConfigError, match=r":1"):
        parse_config(write_cfg(tmp_path, "sim.step = fast\n"))
    with pytest.raises(ConfigError, match="key = value"):
        parse_config(write_cfg(tmp_path, "just some words\n"))


def test_matrix_shorthand_and_full_form(tmp_path):
    cfg = parse_config(write_cfg(tmp_path, "k1 = 4\n"))
    assert np.array_equal(cfg.gains.k1, 4.0 * np.eye(3))
    cfg = parse_config(write_cfg(tmp_path, "k1 = 4,0,0, 0,5,0, 0,0,6\n", name="m.cfg"))
    assert np.array_equal(cfg.gains.k1, np.diag([4.0, 5.0, 6.0]))
    with pytest.raises(ConfigError, match="row-major"):
        parse_config(write_cfg(tmp_path, "k1 = 1, 2\n", name="bad.cfg"))


def test_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("SWITCHMAP_SIM__STEP", "0.002")
    monkeypatch.setenv("SWITCHMAP_V_U", "0.16")
    cfg = parse_config(write_cfg(tmp_path, "seed = 3\n"))
    assert cfg.step == 0.002
    assert cfg.bounds.v_upper == 0.16
    assert cfg.seed == 3


def test_explicit_overrides_win(tmp_path):
    path = write_cfg(tmp_path, "seed = 3\n")
    cfg = parse_config(path, overrides={"seed": "9"})
    assert cfg.seed == 9
    with pytest.raises(ConfigError):
        parse_config(path, overrides={"nope": "1"})


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        parse_config("/nonexistent/config.cfg")


def test_dwell_subcommand_prints_reference_values(tmp_path, capsys):
    code = run_cli(["dwell", "--v-entry", "0.01", "--v-exit", "1e-4"])
    captured = capsys.readouterr().out
    assert code == 0
    values = {}
    for line in captured.splitlines():
        if line.startswith("dt_a_min"):
            values["dt_a"] = float(line.split(">=")[1].split()[0])
        if line.startswith("dt_u_max"):
            values["dt_u"] = float(line.split("<=")[1].split()[0])
    assert values["dt_a"] == pytest.approx(math.log(100.0) / 5.0, abs=1e-9)
    assert values["dt_u"] == pytest.approx(0.5 * math.log(0.2034 / 0.0010), abs=1e-9)


def test_field_subcommand_is_reproducible(tmp_path):
    assert run_cli(["field", "--out", str(tmp_path / "a"), "--grid-resolution", "11"]) == 0
    assert run_cli(["field", "--out", str(tmp_path / "b"), "--grid-resolution", "11"]) == 0
    grid_a = next((tmp_path / "a").glob("run-*/field_grid.csv"))
    grid_b = next((tmp_path / "b").glob("run-*/field_grid.csv"))
    assert grid_a.read_bytes() == grid_b.read_bytes()
    header, first = grid_a.read_text().splitlines()[:2]
    assert header == "x,y,h"
    assert len(first.split(",")) == 3


def test_gp_fit_empty_csv(tmp_path, capsys):
    empty = tmp_path / "empty.csv"
    empty.write_text("t,x,y,z\n")
    code = run_cli(["gp-fit", str(empty), "--out", str(tmp_path)])
    assert code == 2
    assert "no measurements" in capsys.readouterr().err


def test_gp_fit_writes_grid(tmp_path):
    csv = tmp_path / "m.csv"
    csv.write_text("t,x,y,z\n0.0,2.0,0.0,5.1\n0.2,0.0,2.0,4.2\n0.4,-2.0,0.0,5.0\n")
    code = run_cli(["gp-fit", str(csv), "--out", str(tmp_path), "--grid-resolution", "9"])
    assert code == 0
    grid = next(tmp_path.glob("run-*/gp_grid.csv"))
    lines = grid.read_text().splitlines()
    assert lines[0] == "x,y,mean,variance"
    assert len(lines) == 1 + 81


def _digests(run_dir: Path) -> dict:
    manifest = json.loads((run_dir / "manifest.json").read_text())
    return manifest["files"]


def _quick_cfg_file(tmp_path: Path) -> Path:
    lines = [f"{k} = {v}" for k, v in quick_overrides().items()]
    return write_cfg(tmp_path, "\n".join(lines) + "\n")


def test_simulate_reproducible_digests(tmp_path):
    cfg_file = _quick_cfg_file(tmp_path)
    assert run_cli(["simulate", str(cfg_file), "--out", str(tmp_path / "a")]) == 0
    assert run_cli(["simulate", str(cfg_file), "--out", str(tmp_path / "b")]) == 0
    run_a = next((tmp_path / "a").glob("run-*"))
    run_b = next((tmp_path / "b").glob("run-*"))
    digests_a = _digests(run_a)
    digests_b = _digests(run_b)
    assert digests_a == digests_b
    expected = {"timeseries.csv", "measurements.csv", "field_grid.csv", "gp_grid.csv",
                "rmse_curve.csv", "dwell_schedule.json", "summary.json"}
    assert set(digests_a) == expected
    # manifest digests match the actual file contents
    for name, digest in digests_a.items():
        assert hashlib.sha256((run_a / name).read_bytes()).hexdigest() == digest


def test_manifest_reproduces_run(tmp_path):
    cfg_file = _quick_cfg_file(tmp_path)
    assert run_cli(["simulate", str(cfg_file), "--out", str(tmp_path / "a")]) == 0
    run_a = next((tmp_path / "a").glob("run-*"))
    # feed the manifest back in as the config
    assert run_cli(["simulate", str(run_a / "manifest.json"), "--out", str(tmp_path / "c")]) == 0
    run_c = next((tmp_path / "c").glob("run-*"))
    assert _digests(run_a) == _digests(run_c)


def test_evaluate_subcommand(tmp_path):
    cfg_file = _quick_cfg_file(tmp_path)
    assert run_cli(["simulate", str(cfg_file), "--out", str(tmp_path / "a")]) == 0
    run_a = next((tmp_path / "a").glob("run-*"))
    (run_a / "rmse_curve.csv").unlink()
    assert run_cli(["evaluate", str(run_a), "--grid-resolution", "11"]) == 0
    lines = (run_a / "rmse_curve.csv").read_text().splitlines()
    assert lines[0] == "m,rmse,nrmse"
    assert len(lines) >= 2


def test_evaluate_requires_manifest(tmp_path, capsys):
    assert run_cli(["evaluate", str(tmp_path)]) == 2
    assert "manifest" in capsys.readouterr().err


def test_simulate_fault_exit_code(tmp_path, capsys):
    cfg_file = write_cfg(tmp_path, "init.x_hat = 3, 3, 0\n")
    code = run_cli(["simulate", str(cfg_file), "--out", str(tmp_path / "f")])
    assert code == 2
    assert "FAULT" in capsys.readouterr().err
    run_dir = next((tmp_path / "f").glob("run-*"))
    assert (run_dir / "manifest.json").exists()
    assert (run_dir / "timeseries.csv").exists()


def test_config_error_exit_code(tmp_path, capsys):
    cfg_file = write_cfg(tmp_path, "V_u = 0.25\n")
    code = run_cli(["simulate", str(cfg_file), "--out", str(tmp_path)])
    assert code == 1
    assert "cushion" in capsys.readouterr().err


def test_timeseries_header_stable(tmp_path):
    cfg_file = _quick_cfg_file(tmp_path)
    assert run_cli(["simulate", str(cfg_file), "--out", str(tmp_path / "a")]) == 0
    run_a = next((tmp_path / "a").glob("run-*"))
    header = (run_a / "timeseries.csv").read_text().splitlines()[0]
    assert header == ("t,x,y,heading,xhat_x,xhat_y,xhat_heading,"
                      "xd_x,xd_y,xd_heading,e1_x,e1_y,e1_heading,"
                      "e2_x,e2_y,e2_heading,V,region,cycle,segment")
    manifest = json.loads((run_a / "manifest.json").read_text())
    assert manifest["schemas"]["timeseries"] == "switchmap.timeseries.v1"
    assert manifest["seed"] == 0
    assert manifest["config"]["V_u"] == "0.20250000000000001"
