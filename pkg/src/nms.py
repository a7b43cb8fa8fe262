"""Non-Maximum Suppression

Confidence filtering, greedy Non-Maximum Suppression and multi-model NMS ensembling.

The ensemble pools the boxes of every model into one priority queue ordered by confidence,
takes the most confident box, discards every remaining box whose IoU with it exceeds the
threshold, and repeats until the queue is empty.
"""

# Stdlib imports
import os
import sys
from dataclasses import dataclass
from typing import List, Sequence

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Custom modules
from src.customErrors import InvalidArgumentError
from src.detio import Detection
from src.geometry import iou
from src.logger import logger

DEFAULT_IOU_THRESHOLD = 0.45
DEFAULT_CONFIDENCE_THRESHOLD = 0.3


@dataclass(frozen=True)
class FusionConfig:
    """Settings for NMS ensembling.

    Attributes:
        iou_threshold (float): Boxes whose IoU with a selected box exceeds this are discarded.
        confidence_threshold (float): Minimum confidence a detection needs to enter the queue.
        class_aware (bool): Only suppress boxes of the same class.
    """

    iou_threshold: float = DEFAULT_IOU_THRESHOLD
    confidence_threshold: float = DEFAULT_CONFIDENCE_THRESHOLD
    class_aware: bool = True

    def __post_init__(self) -> None:
        if not 0.0 < self.iou_threshold < 1.0:
            raise InvalidArgumentError(f"IoU threshold must lie in (0, 1), got {self.iou_threshold}")
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise InvalidArgumentError(f"Confidence threshold must lie in [0, 1], got {self.confidence_threshold}")


def filter_by_confidence(dets: Sequence[Detection], tau: float) -> List[Detection]:
    """Keeps detections with confidence >= tau, in input order."""

    return [det for det in dets if det.confidence >= tau]


def _suppresses(kept: Detection, other: Detection, cfg: FusionConfig) -> bool:
    if cfg.class_aware and kept.class_id != other.class_id:
        return False
    return iou(kept.bbox, other.bbox) > cfg.iou_threshold


def greedy_nms(dets: Sequence[Detection], cfg: FusionConfig) -> List[Detection]:
    """Greedy Non-Maximum Suppression.

    Equal confidences are ordered by model id, then by input position.
    Does not apply the confidence threshold; see ensemble_fuse.

    Args:
        dets (Sequence[Detection]): Candidate detections.
        cfg (FusionConfig): Suppression settings.

    Returns:
        List[Detection]: Selected detections in selection order.
    """

    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, dets[i].model_id, i))
    queue = [dets[i] for i in order]

    selected: List[Detection] = []
    while queue:
        best = queue[0]
        queue = [other for other in queue[1:] if not _suppresses(best, other, cfg)]
        selected.append(best)

    return selected


def ensemble_fuse(per_model: Sequence[Sequence[Detection]], cfg: FusionConfig) -> List[Detection]:
    """Fuses the detections of several models for one image.

    Args:
        per_model (Sequence[Sequence[Detection]]): One detection list per model.
        cfg (FusionConfig): Fusion settings.

    Returns:
        List[Detection]: Fused detections in selection order.
    """

    model_ids = [{det.model_id for det in dets} for dets in per_model]
    for i in range(len(model_ids)):
        for j in range(i + 1, len(model_ids)):
            if model_ids[i] & model_ids[j]:
                logger.warning(f"Model inputs {i} and {j} share model id(s) {sorted(model_ids[i] & model_ids[j])}")

    pooled = [det for dets in per_model for det in dets]
    return greedy_nms(filter_by_confidence(pooled, cfg.confidence_threshold), cfg)
