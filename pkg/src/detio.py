"""Detection file I/O

Reading and writing of YOLO-format label/prediction files, class-name tables and dataset manifests.

Label line:       class_id cx cy w h
Prediction line:  class_id cx cy w h confidence
"""

# Future imports
from __future__ import annotations

# Stdlib imports
import json
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Custom modules
from src.customErrors import (
    InvalidBoxError,
    LabelFileError,
    LabelParseError,
    ManifestError,
    UnknownClassError,
)
from src.geometry import BBox, YoloBox, corner_to_yolo, yolo_to_corner
from src.logger import logger
from src.predefinedClasses import DHAKA_AI_NAME, dhaka_ai_class_names

PathLike = Union[str, Path]

# Decimal point only, no thousands separators, no nan/inf
_DECIMAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_INTEGER = re.compile(r"\d+")

# Corners this close outside [0, 1] come from 6-decimal rounding and are clipped silently
CLIP_WARN_TOLERANCE = 1e-6

_IMAGE_FIELDS = {"id", "width", "height", "group", "labels", "tags"}
_MANIFEST_FIELDS = {"classes", "images"}


@dataclass(frozen=True)
class GroundTruthBox:
    """Annotated reference box."""

    class_id: int
    bbox: BBox


@dataclass(frozen=True)
class Detection:
    """Predicted box with its confidence and the id of the model that produced it."""

    class_id: int
    bbox: BBox
    confidence: float
    model_id: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise InvalidBoxError(f"Confidence must lie in [0, 1], got {self.confidence}")
        if self.class_id < 0:
            raise InvalidBoxError(f"Class id must be non-negative, got {self.class_id}")
        if self.model_id < 0:
            raise InvalidBoxError(f"Model id must be non-negative, got {self.model_id}")


@dataclass(frozen=True)
class ClassTable:
    """Ordered class names; the position of a name is its class id."""

    names: Tuple[str, ...]

    def __post_init__(self) -> None:
        if any(not name.strip() for name in self.names):
            raise ManifestError("Class names must be non-empty", "classes")
        seen = set()
        for name in self.names:
            if name in seen:
                raise ManifestError(f"Duplicate class name '{name}'", "classes")
            seen.add(name)

    @classmethod
    def from_names(cls, names: Sequence[str]) -> ClassTable:
        return cls(tuple(names))

    @classmethod
    def from_file(cls, path: PathLike) -> ClassTable:
        """Reads a plain-text class file, one name per line. Blank lines are skipped."""

        return cls(tuple(read_class_file(path)))

    @classmethod
    def dhaka_ai(cls) -> ClassTable:
        return cls(tuple(dhaka_ai_class_names()))

    def __len__(self) -> int:
        return len(self.names)

    def name(self, class_id: int) -> str:
        self.check(class_id)
        return self.names[class_id]

    def index_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownClassError(f"Unknown class name '{name}'") from None

    def check(self, class_id: int) -> None:
        if not 0 <= class_id < len(self.names):
            raise UnknownClassError(f"Class id {class_id} outside class table of size {len(self.names)}")


@dataclass(frozen=True)
class ImageRecord:
    """One manifest entry."""

    image_id: str
    width: int
    height: int
    group_key: str
    label_path: Path
    tags: Tuple[str, ...] = ()


@dataclass(frozen=True)
class DatasetManifest:
    """Image records plus the class table of a dataset."""

    classes: ClassTable
    images: Tuple[ImageRecord, ...]
    root: Path = field(default=Path("."))

    def __post_init__(self) -> None:
        seen = set()
        for index, record in enumerate(self.images):
            if record.image_id in seen:
                raise ManifestError(f"Duplicate image id '{record.image_id}'", f"images[{index}].id")
            seen.add(record.image_id)

    def __len__(self) -> int:
        return len(self.images)

    def __iter__(self) -> Iterator[ImageRecord]:
        return iter(self.images)

    def image_ids(self) -> List[str]:
        return [record.image_id for record in self.images]

    def get(self, image_id: str) -> Optional[ImageRecord]:
        for record in self.images:
            if record.image_id == image_id:
                return record
        return None

    def read_ground_truth(self, record: ImageRecord) -> List[GroundTruthBox]:
        return read_label_file(record.label_path, class_count=len(self.classes))


""" Lines """


def _parse_decimal(token: str, what: str, line_no: Optional[int], line: str) -> float:
    if not _DECIMAL.fullmatch(token):
        raise LabelParseError(f"Non-numeric {what} '{token}'", line_no, line)
    return float(token)


def parse_label_line(line: str,
                     has_confidence: bool,
                     class_count: Optional[int] = None,
                     line_no: Optional[int] = None,
                     model_id: int = 0) -> Union[GroundTruthBox, Detection]:
    """Parses one label or prediction line.

    Args:
        line (str): The text line.
        has_confidence (bool): Expect a sixth confidence token (prediction file).
        class_count (int): Size of the class table, if known, for range checking.
        line_no (int): Line number for error messages.
        model_id (int): Model id stamped on parsed detections.

    Returns:
        GroundTruthBox or Detection.
    """

    tokens = line.split()
    expected = 6 if has_confidence else 5
    if len(tokens) != expected:
        raise LabelParseError(f"Expected {expected} tokens, got {len(tokens)}", line_no, line)

    if not _INTEGER.fullmatch(tokens[0]):
        raise LabelParseError(f"Class id must be a non-negative integer, got '{tokens[0]}'", line_no, line)
    class_id = int(tokens[0])
    if class_count is not None and class_id >= class_count:
        raise LabelParseError(f"Class id {class_id} outside class table of size {class_count}", line_no, line)

    cx, cy, w, h = (_parse_decimal(token, "coordinate", line_no, line) for token in tokens[1:5])
    try:
        yolo = YoloBox(cx, cy, w, h)
    except InvalidBoxError as e:
        raise LabelParseError(str(e), line_no, line) from None

    if yolo.needs_clipping(CLIP_WARN_TOLERANCE):
        where = f"line {line_no}" if line_no is not None else "label line"
        logger.warning(f"{where}: box {tokens[1:5]} extends outside the image, clipped to [0, 1]")
    bbox = yolo_to_corner(yolo)

    if not has_confidence:
        return GroundTruthBox(class_id, bbox)

    confidence = _parse_decimal(tokens[5], "confidence", line_no, line)
    if not 0.0 <= confidence <= 1.0:
        raise LabelParseError(f"Confidence {confidence} outside [0, 1]", line_no, line)
    return Detection(class_id, bbox, confidence, model_id)


def format_label_line(box: Union[GroundTruthBox, Detection]) -> str:
    """Renders a box as a label line (or prediction line for detections), 6 decimals."""

    yolo = corner_to_yolo(box.bbox)
    text = f"{box.class_id} {yolo.cx:.6f} {yolo.cy:.6f} {yolo.w:.6f} {yolo.h:.6f}"
    if isinstance(box, Detection):
        text += f" {box.confidence:.6f}"
    return text


""" Files """


def _read_boxes(path: PathLike, has_confidence: bool, class_count: Optional[int], model_id: int) -> list:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except (OSError, UnicodeDecodeError) as e:
        raise LabelFileError(path, f"cannot read file ({e})") from e

    boxes = []
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            boxes.append(parse_label_line(line, has_confidence, class_count, line_no, model_id))
        except LabelParseError as e:
            raise LabelFileError(path, e.reason, line_no) from e
    return boxes


def read_label_file(path: PathLike, class_count: Optional[int] = None) -> List[GroundTruthBox]:
    """Reads a ground-truth label file. Box order follows the file."""

    return _read_boxes(path, False, class_count, 0)


def read_prediction_file(path: PathLike, model_id: int = 0, class_count: Optional[int] = None) -> List[Detection]:
    """Reads a prediction file, stamping every detection with model_id. Box order follows the file."""

    return _read_boxes(path, True, class_count, model_id)


def _write_lines(path: PathLike, lines: List[str]) -> None:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(line + "\n")
    except OSError as e:
        raise LabelFileError(path, f"cannot write file ({e})") from e


def write_label_file(path: PathLike, gts: Sequence[GroundTruthBox]) -> None:
    _write_lines(path, [format_label_line(gt) for gt in gts])


def write_prediction_file(path: PathLike, detections: Sequence[Detection]) -> None:
    _write_lines(path, [format_label_line(det) for det in detections])


def read_class_file(path: PathLike) -> List[str]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return [line.strip() for line in f.read().splitlines() if line.strip()]
    except (OSError, UnicodeDecodeError) as e:
        raise LabelFileError(path, f"cannot read class file ({e})") from e


def read_image_list(path: PathLike) -> List[str]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return [line.strip() for line in f.read().splitlines() if line.strip()]
    except (OSError, UnicodeDecodeError) as e:
        raise LabelFileError(path, f"cannot read image list ({e})") from e


def write_image_list(path: PathLike, image_ids: Sequence[str]) -> None:
    _write_lines(path, list(image_ids))


""" Manifest """


def _require(entry: Dict[str, Any], key: str, key_path: str) -> Any:
    if key not in entry:
        raise ManifestError("missing required field", f"{key_path}.{key}")
    return entry[key]


def _positive_int(value: Any, key_path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value <= 0:
        raise ManifestError(f"must be a positive integer, got {value!r}", key_path)
    return value


def _load_classes(raw: Any, root: Path) -> ClassTable:
    if isinstance(raw, list):
        if not all(isinstance(name, str) for name in raw):
            raise ManifestError("class names must be strings", "classes")
        return ClassTable.from_names(raw)
    if isinstance(raw, str):
        if raw == DHAKA_AI_NAME:
            return ClassTable.dhaka_ai()
        return ClassTable.from_file(root / raw)
    raise ManifestError("must be a list of names or a class file path", "classes")


def _load_image(entry: Any, index: int, root: Path) -> ImageRecord:
    key_path = f"images[{index}]"
    if not isinstance(entry, dict):
        raise ManifestError("image entry must be an object", key_path)

    unknown = set(entry) - _IMAGE_FIELDS
    if unknown:
        logger.debug(f"{key_path}: ignoring unknown field(s) {sorted(unknown)}")

    image_id = _require(entry, "id", key_path)
    if not isinstance(image_id, str) or not image_id:
        raise ManifestError("must be a non-empty string", f"{key_path}.id")
    width = _positive_int(_require(entry, "width", key_path), f"{key_path}.width")
    height = _positive_int(_require(entry, "height", key_path), f"{key_path}.height")
    labels = _require(entry, "labels", key_path)
    if not isinstance(labels, str) or not labels:
        raise ManifestError("must be a file path", f"{key_path}.labels")

    group = entry.get("group", image_id)
    if not isinstance(group, str) or not group:
        raise ManifestError("must be a non-empty string", f"{key_path}.group")
    tags = entry.get("tags", [])
    if not isinstance(tags, list) or not all(isinstance(tag, str) for tag in tags):
        raise ManifestError("must be a list of strings", f"{key_path}.tags")

    return ImageRecord(image_id, width, height, group, root / labels, tuple(tags))


def load_manifest(path: PathLike) -> DatasetManifest:
    """Loads and validates a JSON dataset manifest.

    Label and class-file paths are resolved relative to the manifest's directory.
    A missing group defaults to the image id.
    """

    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = json.load(f)
    except OSError as e:
        raise ManifestError(f"cannot read manifest {path} ({e})") from e
    except json.JSONDecodeError as e:
        raise ManifestError(f"invalid JSON in {path}: {e}") from e

    if not isinstance(document, dict):
        raise ManifestError("manifest must be a JSON object")
    unknown = set(document) - _MANIFEST_FIELDS
    if unknown:
        logger.debug(f"manifest: ignoring unknown field(s) {sorted(unknown)}")

    root = path.parent
    classes = _load_classes(_require(document, "classes", "manifest"), root)
    raw_images = _require(document, "images", "manifest")
    if not isinstance(raw_images, list):
        raise ManifestError("must be a list", "images")

    images = tuple(_load_image(entry, index, root) for index, entry in enumerate(raw_images))
    manifest = DatasetManifest(classes, images, root)
    logger.debug(f"Loaded manifest {path}: {len(images)} images, {len(classes)} classes")
    return manifest


def write_manifest(path: PathLike, manifest: DatasetManifest) -> None:
    """Writes a manifest as JSON; label paths are stored relative to the manifest's directory."""

    path = Path(path)
    images = []
    for record in manifest.images:
        entry: Dict[str, Any] = {
            "id": record.image_id,
            "width": record.width,
            "height": record.height,
            "group": record.group_key,
            "labels": Path(os.path.relpath(record.label_path, path.parent)).as_posix(),
        }
        if record.tags:
            entry["tags"] = list(record.tags)
        images.append(entry)

    document = {"classes": list(manifest.classes.names), "images": images}
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(document, f, indent=2)
            f.write("\n")
    except OSError as e:
        raise ManifestError(f"cannot write manifest {path} ({e})") from e
