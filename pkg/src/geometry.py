"""Box geometry

Canonical bounding-box representation, coordinate conversions and Intersection over Union.
All coordinates are normalized fractions of the image width/height.
"""

# Future imports
from __future__ import annotations

# Stdlib imports
import math
import os
import sys
from dataclasses import dataclass
from typing import Sequence, Tuple

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Third-party modules
import numpy as np

# Custom modules
from src.customErrors import InvalidArgumentError, InvalidBoxError


def _clip_unit(value: float) -> float:
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in normalized corner coordinates.

    Attributes:
        x_min (float): Left edge, fraction of image width.
        y_min (float): Top edge, fraction of image height.
        x_max (float): Right edge.
        y_max (float): Bottom edge.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        coords = self.as_tuple()
        if not all(math.isfinite(c) for c in coords):
            raise InvalidBoxError(f"Box coordinates must be finite: {coords}")
        if not all(0.0 <= c <= 1.0 for c in coords):
            raise InvalidBoxError(f"Box coordinates must lie in [0, 1]: {coords}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise InvalidBoxError(f"Box corners are inverted: {coords}")

    @classmethod
    def clipped(cls, x_min: float, y_min: float, x_max: float, y_max: float) -> BBox:
        """Builds a box after clipping every coordinate to [0, 1]."""

        return cls(_clip_unit(x_min), _clip_unit(y_min), _clip_unit(x_max), _clip_unit(y_max))

    def as_tuple(self) -> Tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    def shifted(self, dx: float, dy: float) -> BBox:
        """Returns the box translated by (dx, dy). The result must stay in range."""

        return BBox(self.x_min + dx, self.y_min + dy, self.x_max + dx, self.y_max + dy)


@dataclass(frozen=True)
class YoloBox:
    """Box in the YOLO label convention: normalized center and size."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        values = (self.cx, self.cy, self.w, self.h)
        if not all(math.isfinite(v) for v in values):
            raise InvalidBoxError(f"YOLO box values must be finite: {values}")
        if self.w < 0 or self.h < 0:
            raise InvalidBoxError(f"YOLO box width/height must be non-negative: {values}")

    def raw_corners(self) -> Tuple[float, float, float, float]:
        """Corners before clipping."""

        half_w = self.w / 2
        half_h = self.h / 2
        return (self.cx - half_w, self.cy - half_h, self.cx + half_w, self.cy + half_h)

    def needs_clipping(self, tolerance: float = 0.0) -> bool:
        return not all(-tolerance <= c <= 1.0 + tolerance for c in self.raw_corners())


@dataclass(frozen=True)
class PixelRect:
    """Box in absolute pixel coordinates."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float


def area(b: BBox) -> float:
    """Area of a box as a fraction of the image area. Degenerate boxes return 0."""

    return (b.x_max - b.x_min) * (b.y_max - b.y_min)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over Union of two boxes.

    Returns 0 for disjoint boxes and when the union area is 0 (two degenerate boxes).
    """

    inter_w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    inter_h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if inter_w <= 0.0 or inter_h <= 0.0:
        return 0.0

    inter = inter_w * inter_h
    union = area(a) + area(b) - inter
    if union <= 0.0:
        return 0.0
    return min(1.0, inter / union)


def iou_matrix(boxes_a: Sequence[BBox], boxes_b: Sequence[BBox]) -> np.ndarray:
    """Pairwise IoU, shape (len(boxes_a), len(boxes_b)).

    Uses the same arithmetic as iou(), so entries equal the scalar results exactly.
    """

    a = np.array([box.as_tuple() for box in boxes_a], dtype=np.float64).reshape(-1, 4)
    b = np.array([box.as_tuple() for box in boxes_b], dtype=np.float64).reshape(-1, 4)

    inter_w = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    inter_h = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    overlapping = (inter_w > 0.0) & (inter_h > 0.0)
    inter = np.where(overlapping, inter_w * inter_h, 0.0)

    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter

    with np.errstate(divide="ignore", invalid="ignore"):
        result = np.where(overlapping & (union > 0.0), inter / union, 0.0)
    return np.minimum(result, 1.0)


def yolo_to_corner(y: YoloBox) -> BBox:
    """Converts a YOLO box to corner form, clipping to the unit square."""

    return BBox.clipped(*y.raw_corners())


def corner_to_yolo(b: BBox) -> YoloBox:
    """Converts a corner box to YOLO form.

    yolo_to_corner(corner_to_yolo(b)) restores b to within 1e-12 per coordinate; the round trip
    is exact only when the coordinates are dyadic fractions.
    """

    w = b.x_max - b.x_min
    h = b.y_max - b.y_min
    return YoloBox(b.x_min + w / 2, b.y_min + h / 2, w, h)


def _check_dimensions(width: float, height: float) -> None:
    if not (width > 0 and height > 0):
        raise InvalidArgumentError(f"Image dimensions must be positive, got {width}x{height}")


def to_pixels(b: BBox, width: float, height: float) -> PixelRect:
    """Scales a normalized box to pixel coordinates of a width x height image."""

    _check_dimensions(width, height)
    return PixelRect(b.x_min * width, b.y_min * height, b.x_max * width, b.y_max * height)


def from_pixels(rect: PixelRect, width: float, height: float) -> BBox:
    """Normalizes a pixel rectangle, clipping to the image."""

    _check_dimensions(width, height)
    return BBox.clipped(rect.x_min / width, rect.y_min / height, rect.x_max / width, rect.y_max / height)
