import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import json
from typer.testing import CliRunner
from src.cli import app
from src.detio import read_image_list, read_prediction_file

# Keeps stderr out of result.stdout on click 8.1; 8.2 always separates them
try:
    runner = CliRunner(mix_stderr=False)
except TypeError:
    runner = CliRunner()

SMALL_EXPERIMENT = """
[scene]
image_count = 12
seed = 3

[[detectors]]
name = "alpha"

[[detectors]]
name = "beta"

[[detectors]]
name = "gamma"
"""


def invoke(*args):
    return runner.invoke(app, ["-q", *[str(a) for a in args]])


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "experiment.toml"
    path.write_text(SMALL_EXPERIMENT, encoding="utf-8")
    return path


@pytest.fixture
def dataset(tmp_path, config_path):
    out = tmp_path / "data"
    result = invoke("simulate", "--out", out, "--config", config_path)
    assert result.exit_code == 0, result.output
    return out


class TestSimulate:
    def test_writes_dataset(self, dataset):
        assert (dataset / "manifest.json").is_file()
        assert len(list((dataset / "labels").glob("*.txt"))) == 12
        for name in ("alpha", "beta", "gamma"):
            assert len(list((dataset / "predictions" / name).glob("*.txt"))) == 12

    def test_bad_config(self, tmp_path):
        path = tmp_path / "bad.toml"
        path.write_text("[scene]\ncolour = 1\n", encoding="utf-8")
        assert invoke("simulate", "--out", tmp_path / "x", "--config", path).exit_code == 2

    def test_bad_thread_env(self, tmp_path, config_path, monkeypatch):
        monkeypatch.setenv("NMSENS_THREADS", "0")
        assert invoke("simulate", "--out", tmp_path / "x", "--config", config_path).exit_code == 2


class TestFuse:
    def test_fuse_and_eval(self, dataset, tmp_path):
        preds = dataset / "predictions"
        fused = tmp_path / "fused"
        result = invoke("fuse", "--inputs", preds / "alpha", "--inputs", preds / "beta", "--inputs", preds / "gamma",
                        "--out", fused, "--threads", 2)
        assert result.exit_code == 0, result.output
        assert len(list(fused.glob("*.txt"))) == 12
        for path in fused.glob("*.txt"):
            assert all(d.confidence >= 0.3 for d in read_prediction_file(path))

        result = invoke("eval", "--pred", fused, "--gt", dataset / "manifest.json", "--format", "json")
        assert result.exit_code == 0, result.output
        report = json.loads(result.stdout)
        assert report["schema_version"] == 1
        assert report["map"][0]["iou_threshold"] == 0.5
        assert 0.0 < report["map"][0]["map"] <= 1.0

    def test_missing_file_in_one_directory(self, dataset, tmp_path):
        preds = dataset / "predictions"
        (preds / "beta" / "img_00004.txt").unlink()
        result = invoke("fuse", "--inputs", preds / "alpha", "--inputs", preds / "beta", "--out", tmp_path / "fused")
        assert result.exit_code == 2

    def test_bad_threshold(self, dataset, tmp_path):
        preds = dataset / "predictions"
        result = invoke("fuse", "--inputs", preds / "alpha", "--out", tmp_path / "fused", "--iou", 1.5)
        assert result.exit_code == 2

    def test_malformed_prediction(self, dataset, tmp_path):
        preds = dataset / "predictions"
        (preds / "alpha" / "img_00000.txt").write_text("0 0.5 0.5 0.1\n", encoding="utf-8")
        result = invoke("fuse", "--inputs", preds / "alpha", "--out", tmp_path / "fused")
        assert result.exit_code == 2


class TestEval:
    def test_ground_truth_scores_one(self, dataset, tmp_path):
        perfect = tmp_path / "perfect"
        perfect.mkdir()
        for label in (dataset / "labels").glob("*.txt"):
            lines = [f"{line} 0.900000" for line in label.read_text(encoding="utf-8").splitlines()]
            (perfect / label.name).write_text("".join(line + "\n" for line in lines), encoding="utf-8")

        result = invoke("eval", "--pred", perfect, "--gt", dataset / "manifest.json", "--iou-range", "0.5:0.95:0.05",
                        "--format", "json")
        assert result.exit_code == 0, result.output
        report = json.loads(result.stdout)
        assert len(report["map"]) == 10
        assert report["map_mean"] == pytest.approx(1.0, abs=1e-6)

    def test_text_report_and_curves(self, dataset, tmp_path):
        result = invoke("eval", "--pred", dataset / "predictions" / "alpha", "--gt", dataset / "manifest.json",
                        "--curves", tmp_path / "curves", "--interpolated")
        assert result.exit_code == 0, result.output
        assert "mAP" in result.stdout
        csvs = list((tmp_path / "curves").glob("*.csv"))
        assert csvs
        assert csvs[0].read_text(encoding="utf-8").startswith("threshold,recall,precision\n")

    def test_unknown_image(self, dataset):
        (dataset / "predictions" / "alpha" / "img_99999.txt").write_text("", encoding="utf-8")
        result = invoke("eval", "--pred", dataset / "predictions" / "alpha", "--gt", dataset / "manifest.json")
        assert result.exit_code == 2

    def test_iou_and_range_are_exclusive(self, dataset):
        result = invoke("eval", "--pred", dataset / "predictions" / "alpha", "--gt", dataset / "manifest.json",
                        "--iou", 0.5, "--iou-range", "0.5:0.95:0.05")
        assert result.exit_code == 2

    def test_config_printed_when_quiet(self, dataset):
        result = invoke("eval", "--pred", dataset / "predictions" / "alpha", "--gt", dataset / "manifest.json",
                        "--conf", 0.25, "--format", "json")
        assert result.exit_code == 0, result.output
        assert "eval: " in result.stderr
        assert "conf=0.25" in result.stderr
        assert json.loads(result.stdout)["schema_version"] == 1

    def test_reproducible_json(self, dataset, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1600000000")
        args = ("eval", "--pred", dataset / "predictions" / "beta", "--gt", dataset / "manifest.json", "--format", "json")
        assert invoke(*args).stdout == invoke(*args).stdout


class TestCompare:
    def test_rows_per_model(self, dataset):
        preds = dataset / "predictions"
        result = invoke("compare", "--gt", dataset / "manifest.json", "--pred", f"alpha={preds / 'alpha'}",
                        "--pred", f"beta={preds / 'beta'}", "--time", "alpha=0.05", "--format", "json")
        assert result.exit_code == 0, result.output
        models = json.loads(result.stdout)["models"]
        assert [m["metadata"]["model_name"] for m in models] == ["alpha", "beta"]
        assert models[0]["metadata"]["inference_time"] == 0.05
        assert models[1]["metadata"]["inference_time"] is None

    def test_bad_pair(self, dataset):
        result = invoke("compare", "--gt", dataset / "manifest.json", "--pred", "alpha")
        assert result.exit_code == 2


class TestDatasetCommands:
    def test_stats(self, dataset, tmp_path):
        result = invoke("stats", dataset / "manifest.json", "--csv", tmp_path / "stats.csv")
        assert result.exit_code == 0, result.output
        assert "Total" in result.stdout
        rows = (tmp_path / "stats.csv").read_text(encoding="utf-8").splitlines()
        assert rows[0] == "class_id,class_name,label_count"
        assert len(rows) == 22

    def test_split(self, dataset, tmp_path):
        result = invoke("split", dataset / "manifest.json", "--out", tmp_path / "folds", "-k", 3, "--seed", 1)
        assert result.exit_code == 0, result.output
        val_ids = [image_id for i in range(3) for image_id in read_image_list(tmp_path / "folds" / f"fold{i + 1}_val.txt")]
        assert sorted(val_ids) == [f"img_{i:05d}" for i in range(12)]

    def test_split_too_many_folds(self, dataset, tmp_path):
        result = invoke("split", dataset / "manifest.json", "--out", tmp_path / "folds", "-k", 50)
        assert result.exit_code == 2

    def test_audit(self, dataset):
        label = dataset / "labels" / "img_00000.txt"
        first = label.read_text(encoding="utf-8").splitlines()[0]
        label.write_text(f"{first}\n{first}\n", encoding="utf-8")
        result = invoke("audit", "--gt", dataset / "manifest.json", "--format", "json")
        assert result.exit_code == 0, result.output
        anomalies = json.loads(result.stdout)["anomalies"]
        assert [(a["image_id"], a["category"]) for a in anomalies] == [("img_00000", "double-label")]

    def test_missing_manifest(self, tmp_path):
        assert invoke("stats", tmp_path / "nope.json").exit_code == 2


class TestExperiment:
    def test_json(self, config_path):
        result = invoke("experiment", "--config", config_path, "--runs", 2, "--format", "json")
        assert result.exit_code == 0, result.output
        document = json.loads(result.stdout)
        assert [row["name"] for row in document["rows"]] == ["alpha", "beta", "gamma", "NMS ensemble (3 models)"]
        assert len(document["runs"]) == 2

    def test_text(self, config_path):
        result = invoke("experiment", "--config", config_path)
        assert result.exit_code == 0, result.output
        assert "win" in result.stdout

    def test_bad_runs(self, config_path):
        assert invoke("experiment", "--config", config_path, "--runs", 0).exit_code == 2

    def test_default_config_ensemble_is_highest(self):
        result = invoke("experiment", "--format", "json")
        assert result.exit_code == 0, result.output
        document = json.loads(result.stdout)
        assert document["runs"][0]["seed"] == 42
        *singles, fused = document["rows"]
        assert len(singles) == 4
        assert all(fused["map"] > row["map"] for row in singles)
        assert document["tally"] == {"wins": 1, "losses": 0, "ties": 0}
