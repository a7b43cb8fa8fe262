import pytest
import sys
import os

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

import json
import logging
import numpy as np
from src.detio import (
    ClassTable,
    DatasetManifest,
    Detection,
    GroundTruthBox,
    ImageRecord,
    format_label_line,
    load_manifest,
    parse_label_line,
    read_label_file,
    read_prediction_file,
    write_label_file,
    write_manifest,
    write_prediction_file,
)
from src.geometry import BBox
from src.customErrors import LabelFileError, LabelParseError, ManifestError, UnknownClassError
from src.predefinedClasses import dhaka_ai_class_names


def write_json(path, document):
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


def random_bbox(rng):
    x0, x1 = sorted(float(v) for v in rng.uniform(0, 1, 2))
    y0, y1 = sorted(float(v) for v in rng.uniform(0, 1, 2))
    return BBox(x0, y0, x1, y1)


class TestParseLabelLine:
    def test_ground_truth_line(self):
        box = parse_label_line("5 0.5 0.5 1.0 1.0", has_confidence=False)
        assert box == GroundTruthBox(5, BBox(0, 0, 1, 1))

    def test_prediction_line(self):
        det = parse_label_line("2 0.25 0.25 0.5 0.5 0.9", has_confidence=True)
        assert det == Detection(2, BBox(0, 0, 0.5, 0.5), 0.9, 0)

    def test_model_id_is_stamped(self):
        det = parse_label_line("2 0.25 0.25 0.5 0.5 0.9", has_confidence=True, model_id=3)
        assert det.model_id == 3

    def test_token_count(self):
        with pytest.raises(LabelParseError) as info:
            parse_label_line("1 0.5", has_confidence=False, line_no=4)
        assert info.value.line_no == 4

    def test_missing_confidence(self):
        with pytest.raises(LabelParseError):
            parse_label_line("1 0.5 0.5 0.1 0.1", has_confidence=True)

    def test_non_numeric(self):
        with pytest.raises(LabelParseError):
            parse_label_line("1 0.5 abc 0.1 0.1", has_confidence=False)

    def test_decimal_comma_rejected(self):
        with pytest.raises(LabelParseError):
            parse_label_line("1 0,5 0.5 0.1 0.1", has_confidence=False)

    def test_separators_and_specials_rejected(self):
        for token in ("1_000", "nan", "inf"):
            with pytest.raises(LabelParseError):
                parse_label_line(f"1 {token} 0.5 0.1 0.1", has_confidence=False)

    def test_class_out_of_range(self):
        with pytest.raises(LabelParseError):
            parse_label_line("21 0.5 0.5 0.1 0.1", has_confidence=False, class_count=21)

    def test_fractional_class_rejected(self):
        with pytest.raises(LabelParseError):
            parse_label_line("1.5 0.5 0.5 0.1 0.1", has_confidence=False)

    def test_confidence_out_of_range(self):
        with pytest.raises(LabelParseError):
            parse_label_line("1 0.5 0.5 0.1 0.1 1.2", has_confidence=True)

    def test_negative_size(self):
        with pytest.raises(LabelParseError):
            parse_label_line("1 0.5 0.5 -0.1 0.1", has_confidence=False)

    def test_out_of_range_box_is_clipped_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="nmsens"):
            box = parse_label_line("0 0.95 0.5 0.2 0.2", has_confidence=False, line_no=7)
        assert box.bbox.x_max == 1.0
        assert "line 7" in caplog.text

    def test_scientific_notation(self):
        box = parse_label_line("0 5e-1 0.5 1 1", has_confidence=False)
        assert box.bbox == BBox(0, 0, 1, 1)


class TestLabelFiles:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("", encoding="utf-8")
        assert read_label_file(path) == []

    def test_order_preserved(self, tmp_path):
        path = tmp_path / "three.txt"
        path.write_text("2 0.5 0.5 0.2 0.2\n0 0.25 0.25 0.5 0.5\n1 0.5 0.5 1 1\n", encoding="utf-8")
        assert [b.class_id for b in read_label_file(path)] == [2, 0, 1]

    def test_bad_line_names_location(self, tmp_path):
        path = tmp_path / "bad.txt"
        lines = ["0 0.5 0.5 0.2 0.2"] * 5
        lines[3] = "0 0.5 0.5 0.2"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(LabelFileError) as info:
            read_label_file(path)
        assert info.value.line_no == 4
        assert "bad.txt:4" in str(info.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(LabelFileError):
            read_label_file(tmp_path / "nope.txt")

    def test_confidence_formatting(self):
        det = Detection(1, BBox(0, 0, 0.5, 0.5), 0.3)
        assert format_label_line(det).split()[-1] == "0.300000"
        assert format_label_line(det) == "1 0.250000 0.250000 0.500000 0.500000 0.300000"

    def test_empty_list_writes_empty_file(self, tmp_path):
        path = tmp_path / "out.txt"
        write_prediction_file(path, [])
        assert path.read_bytes() == b""

    def test_prediction_round_trip(self, tmp_path):
        dets = [Detection(3, BBox(0.1, 0.2, 0.4, 0.6), 0.75, 2), Detection(0, BBox(0, 0, 1, 1), 0.3, 2)]
        path = tmp_path / "pred.txt"
        write_prediction_file(path, dets)
        back = read_prediction_file(path, model_id=2)
        for original, parsed in zip(dets, back):
            assert parsed.class_id == original.class_id
            assert parsed.model_id == 2
            assert np.allclose(parsed.bbox.as_tuple(), original.bbox.as_tuple(), rtol=0, atol=1e-6)

    def test_randomized_round_trip(self, tmp_path):
        rng = np.random.default_rng(99)
        for index in range(1000):
            count = int(rng.integers(0, 8))
            predictions = index % 2 == 1
            boxes = []
            for _ in range(count):
                class_id = int(rng.integers(0, 21))
                if predictions:
                    boxes.append(Detection(class_id, random_bbox(rng), float(rng.uniform(0, 1))))
                else:
                    boxes.append(GroundTruthBox(class_id, random_bbox(rng)))

            path = tmp_path / f"file_{index}.txt"
            if predictions:
                write_prediction_file(path, boxes)
                back = read_prediction_file(path)
            else:
                write_label_file(path, boxes)
                back = read_label_file(path)

            assert len(back) == len(boxes)
            for original, parsed in zip(boxes, back):
                assert parsed.class_id == original.class_id
                assert np.allclose(parsed.bbox.as_tuple(), original.bbox.as_tuple(), rtol=0, atol=1e-6)
                if predictions:
                    assert abs(parsed.confidence - original.confidence) <= 1e-6


class TestClassTable:
    def test_names_and_ids(self):
        table = ClassTable.from_names(["car", "bus"])
        assert len(table) == 2
        assert table.name(1) == "bus"
        assert table.index_of("car") == 0

    def test_unknown(self):
        table = ClassTable.from_names(["car"])
        with pytest.raises(UnknownClassError):
            table.name(1)
        with pytest.raises(UnknownClassError):
            table.index_of("bus")

    def test_duplicates_rejected(self):
        with pytest.raises(ManifestError):
            ClassTable.from_names(["car", "car"])

    def test_class_file(self, tmp_path):
        path = tmp_path / "classes.txt"
        path.write_text("car\nbus\n\ntruck\n", encoding="utf-8")
        assert ClassTable.from_file(path).names == ("car", "bus", "truck")

    def test_dhaka_ai(self):
        table = ClassTable.dhaka_ai()
        assert len(table) == 21
        assert table.name(5) == "Car"


class TestManifest:
    def test_twenty_one_classes(self, tmp_path):
        path = write_json(tmp_path / "m.json", {"classes": dhaka_ai_class_names(), "images": []})
        assert len(load_manifest(path).classes) == 21

    def test_named_class_table(self, tmp_path):
        path = write_json(tmp_path / "m.json", {"classes": "dhaka-ai", "images": []})
        assert load_manifest(path).classes.name(13) == "Rickshaw"

    def test_class_file_reference(self, tmp_path):
        (tmp_path / "names.txt").write_text("car\nbus\n", encoding="utf-8")
        path = write_json(tmp_path / "m.json", {"classes": "names.txt", "images": []})
        assert load_manifest(path).classes.names == ("car", "bus")

    def test_shared_group_and_defaults(self, tmp_path):
        path = write_json(tmp_path / "m.json", {
            "classes": ["car"],
            "images": [
                {"id": "a", "width": 1024, "height": 1024, "group": "frame_07", "labels": "labels/a.txt"},
                {"id": "b", "width": 1024, "height": 1024, "group": "frame_07", "labels": "labels/b.txt"},
                {"id": "c", "width": 640, "height": 480, "labels": "labels/c.txt", "tags": ["night"], "note": "x"},
            ],
        })
        manifest = load_manifest(path)
        assert [r.group_key for r in manifest] == ["frame_07", "frame_07", "c"]
        assert manifest.get("c").tags == ("night",)
        assert manifest.get("a").label_path == tmp_path / "labels" / "a.txt"

    def test_duplicate_id(self, tmp_path):
        image = {"id": "a", "width": 10, "height": 10, "labels": "a.txt"}
        path = write_json(tmp_path / "m.json", {"classes": ["car"], "images": [image, dict(image)]})
        with pytest.raises(ManifestError) as info:
            load_manifest(path)
        assert info.value.key_path == "images[1].id"

    def test_missing_field(self, tmp_path):
        path = write_json(tmp_path / "m.json", {"classes": ["car"], "images": [{"id": "a", "height": 10, "labels": "a.txt"}]})
        with pytest.raises(ManifestError) as info:
            load_manifest(path)
        assert info.value.key_path == "images[0].width"

    def test_non_positive_dimension(self, tmp_path):
        path = write_json(tmp_path / "m.json", {"classes": ["car"], "images": [{"id": "a", "width": 0, "height": 10, "labels": "a.txt"}]})
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("{not json", encoding="utf-8")
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_write_and_load(self, tmp_path):
        records = (
            ImageRecord("a", 1024, 1024, "g1", tmp_path / "labels" / "a.txt", ("night",)),
            ImageRecord("b", 640, 640, "g1", tmp_path / "labels" / "b.txt"),
        )
        manifest = DatasetManifest(ClassTable.from_names(["car", "bus"]), records, tmp_path)
        write_manifest(tmp_path / "manifest.json", manifest)
        loaded = load_manifest(tmp_path / "manifest.json")
        assert loaded.images == records
        assert loaded.classes == manifest.classes
