import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import json
from src.dataset import AnomalyKind, ClassStats, LabelAnomaly
from src.detio import Detection, write_prediction_file
from src.geometry import BBox
from src.nms import FusionConfig
from src.pipeline import fuse_directories, resolve_threads
from src.reports import (
    anomalies_to_json,
    class_stats_to_csv,
    render_anomalies,
    render_class_stats,
    render_comparison,
    render_folds,
    render_to_text,
)
from src.customErrors import InvalidArgumentError, MissingPredictionFilesError


class TestRenderers:
    def test_class_stats_table(self):
        stats = ClassStats(("Car", "Bus"), (5574, 3340), 10)
        text = render_to_text(render_class_stats(stats))
        assert "Sample Distribution per Class" in text
        assert "8914" in text

    def test_titles_stay_on_one_line(self):
        stats = ClassStats(("Car",), (1,), 1)
        assert "Sample Distribution per Class" in render_to_text(render_class_stats(stats), width=40)
        assert "Comparison of performance and inference time" in render_to_text(render_comparison([]))

    def test_class_stats_csv(self):
        stats = ClassStats(("Car", "Bus"), (3, 0), 1)
        assert class_stats_to_csv(stats) == "class_id,class_name,label_count\n0,Car,3\n1,Bus,0\n"

    def test_single_anomaly(self):
        anomaly = LabelAnomaly("img_1", AnomalyKind.CONFLICTING_LABEL, 0, 1, "Truck", "Pickup", 1.0)
        assert "1 anomaly" in render_to_text(render_anomalies([anomaly]))
        document = json.loads(anomalies_to_json([anomaly]))
        assert document["anomalies"][0] == {
            "image_id": "img_1",
            "category": "conflicting-label",
            "boxes": [0, 1],
            "classes": ["Truck", "Pickup"],
            "iou": 1.0,
        }

    def test_no_anomalies(self):
        assert "0 anomalies" in render_to_text(render_anomalies([]))

    def test_folds(self):
        text = render_to_text(render_folds([(1, 2506, 600), (2, 2321, 785)]))
        assert "2506" in text and "785" in text


class TestPipeline:
    def test_missing_files_are_listed(self, tmp_path):
        det = Detection(0, BBox(0.1, 0.1, 0.3, 0.3), 0.9)
        for name, stems in (("a", ["x", "y"]), ("b", ["x"])):
            for stem in stems:
                write_prediction_file(tmp_path / name / f"{stem}.txt", [det])
        with pytest.raises(MissingPredictionFilesError) as info:
            fuse_directories([tmp_path / "a", tmp_path / "b"], tmp_path / "out", FusionConfig())
        assert info.value.missing == {str(tmp_path / "b"): ["y.txt"]}

    def test_fused_files(self, tmp_path):
        first = Detection(0, BBox(0.1, 0.1, 0.3, 0.3), 0.9)
        second = Detection(0, BBox(0.11, 0.11, 0.31, 0.31), 0.8)
        write_prediction_file(tmp_path / "a" / "x.txt", [first])
        write_prediction_file(tmp_path / "b" / "x.txt", [second])
        counts = fuse_directories([tmp_path / "a", tmp_path / "b"], tmp_path / "out", FusionConfig(), threads=2)
        assert counts == {"x": 1}
        assert (tmp_path / "out" / "x.txt").read_text(encoding="utf-8").startswith("0 0.200000 0.200000")

    def test_threads_from_environment(self, monkeypatch):
        monkeypatch.setenv("NMSENS_THREADS", "3")
        assert resolve_threads() == 3
        assert resolve_threads(2) == 2
        monkeypatch.setenv("NMSENS_THREADS", "many")
        with pytest.raises(InvalidArgumentError):
            resolve_threads()
