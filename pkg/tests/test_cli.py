import json
from os.path import dirname, join

import pandas as pd
from click.testing import CliRunner

from kac_lab.cli import main
from kac_lab.estimators import CSV_COLUMNS


def config_file(name):
    return join(dirname(__file__), "files", name)


def run(name, out_dir, *args):
    runner = CliRunner()
    return runner.invoke(main, ["--config", config_file(name), "--out", str(out_dir), "--quiet", *args])


def test_estimate(tmp_path):
    result = run("half_line.json", tmp_path)
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(tmp_path / "estimates.csv")
    assert list(frame.columns) == CSV_COLUMNS
    assert frame["estimator_kind"][0] == "dirichlet"
    assert frame["region_id"][0] == "half-line"
    assert abs(frame["value_re"][0] - 0.8427) < 0.05

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["master_seed"] == 42
    assert manifest["artifacts"] == ["estimates.csv"]
    assert manifest["config"]["N"] == 4000
    assert manifest["settings"]["BLOCK_SIZE"] == 2048
    assert manifest["version"]


def test_same_seed_same_bits(tmp_path):
    run("half_line.json", tmp_path / "a", "--seed", "11")
    run("half_line.json", tmp_path / "b", "--seed", "11")
    run("half_line.json", tmp_path / "c", "--seed", "11", "--workers", "2")
    a, b, c = (pd.read_csv(tmp_path / name / "estimates.csv") for name in "abc")
    assert a["value_re"][0] == b["value_re"][0] == c["value_re"][0]
    assert a["stderr"][0] == c["stderr"][0]
    assert a["master_seed"][0] == 11


def test_penalized_rows(tmp_path):
    result = run("penalized_half_line.json", tmp_path)
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(tmp_path / "estimates.csv")
    assert frame["n_penalty"].tolist() == [10.0, 1000.0]
    assert frame["value_re"][0] >= frame["value_re"][1]


def test_invalid_config(tmp_path):
    result = run("empty.json", tmp_path)
    assert result.exit_code == 2
    record = json.loads((tmp_path / "error.json").read_text())
    assert record["error"] == "invalid-config"
    assert record["exit_code"] == 2


def test_geometry_error(tmp_path):
    result = run("start_outside.json", tmp_path)
    assert result.exit_code == 3
    record = json.loads((tmp_path / "error.json").read_text())
    assert record["error"] == "geometry"


def test_missing_config(tmp_path):
    result = run("missing.json", tmp_path)
    assert result.exit_code == 2


def test_kato(tmp_path):
    result = run("kato_constant.json", tmp_path)
    assert result.exit_code == 0, result.output
    frame = pd.read_csv(tmp_path / "kato.csv")
    assert len(frame) == 3
    assert (abs(frame["value"] - 2.5) < 1e-6).all()


def test_battery(tmp_path):
    result = run("segment_battery.json", tmp_path)
    assert result.exit_code == 0, result.output
    assert "irregular" in result.output
    report = pd.read_csv(tmp_path / "report.csv")
    assert report["level"].tolist() == [0, 1, 2]
    exhaustion = pd.read_csv(tmp_path / "exhaustion.csv")
    assert exhaustion.empty


def test_grid(tmp_path):
    result = run("disk_grid.json", tmp_path)
    assert result.exit_code == 0, result.output
    estimates = pd.read_csv(tmp_path / "estimates.csv")
    assert estimates["estimator_kind"][0] == "grid"
    assert 0 < estimates["value_re"][0] < 1
    defects = pd.read_csv(tmp_path / "defects.csv")
    assert defects["n"].tolist() == [10.0, 100.0, 1000.0]
    assert (tmp_path / "operator.coo").exists()
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["artifacts"] == ["estimates.csv", "defects.csv", "operator.coo"]


def test_non_integrable_kato(tmp_path):
    result = run("kato_non_integrable.json", tmp_path)
    assert result.exit_code == 5
    record = json.loads((tmp_path / "error.json").read_text())
    assert record["error"] == "not-locally-integrable"
