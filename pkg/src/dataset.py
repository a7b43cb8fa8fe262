"""Dataset tooling

Class-distribution statistics, grouped k-fold splitting and ground-truth label auditing.
"""

# Future imports
from __future__ import annotations

# Stdlib imports
import os
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Third-party modules
import numpy as np

# Custom modules
from src.customErrors import FoldSplitError, InvalidArgumentError
from src.detio import DatasetManifest, GroundTruthBox, write_image_list
from src.geometry import area, iou_matrix
from src.logger import logger

DEFAULT_AUDIT_IOU = 0.9


@dataclass(frozen=True)
class ClassStats:
    """Ground-truth label count per class."""

    names: Tuple[str, ...]
    counts: Tuple[int, ...]
    image_count: int

    @property
    def total(self) -> int:
        return sum(self.counts)

    def count_of(self, name: str) -> int:
        return self.counts[self.names.index(name)]


@dataclass(frozen=True)
class FoldSpec:
    """One train/validation partition."""

    fold_index: int
    train_image_ids: FrozenSet[str]
    val_image_ids: FrozenSet[str]


class AnomalyKind(Enum):
    DOUBLE_LABEL = "double-label"
    CONFLICTING_LABEL = "conflicting-label"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class LabelAnomaly:
    """A suspicious ground-truth box or box pair. Box indices follow the label file order."""

    image_id: str
    kind: AnomalyKind
    first_index: int
    second_index: Optional[int]
    first_class: str
    second_class: Optional[str]
    iou: Optional[float]


def class_stats(manifest: DatasetManifest) -> ClassStats:
    """Counts ground-truth boxes per class over every image of the manifest."""

    counts = [0] * len(manifest.classes)
    for record in manifest:
        for gt in manifest.read_ground_truth(record):
            counts[gt.class_id] += 1

    logger.debug(f"Counted {sum(counts)} labels over {len(manifest)} images")
    return ClassStats(manifest.classes.names, tuple(counts), len(manifest))


def split_folds(manifest: DatasetManifest, k: int, seed: int, only_tag: Optional[str] = None) -> List[FoldSpec]:
    """Grouped k-fold split.

    Groups, not images, are shuffled with the seeded generator and dealt round-robin into k
    validation buckets, so images of one frame group always land on the same side.

    Args:
        manifest (DatasetManifest): Dataset to split.
        k (int): Number of folds, at least 2.
        seed (int): Shuffle seed.
        only_tag (str): Restrict the split to images carrying this tag.

    Returns:
        List[FoldSpec]: Fold i validates on bucket i and trains on the rest.
    """

    if k < 2:
        raise InvalidArgumentError(f"Number of folds must be at least 2, got {k}")

    records = [r for r in manifest if only_tag is None or only_tag in r.tags]
    groups: Dict[str, List[str]] = {}
    for record in records:
        groups.setdefault(record.group_key, []).append(record.image_id)

    if len(groups) < k:
        raise FoldSplitError(f"Cannot make {k} folds from {len(groups)} group(s)")

    keys = np.array(sorted(groups), dtype=object)
    rng = np.random.default_rng(seed)
    rng.shuffle(keys)

    buckets: List[set] = [set() for _ in range(k)]
    for position, key in enumerate(keys):
        buckets[position % k].update(groups[key])

    all_ids = frozenset(r.image_id for r in records)
    folds = [FoldSpec(i, all_ids - frozenset(bucket), frozenset(bucket)) for i, bucket in enumerate(buckets)]
    for fold in folds:
        logger.debug(f"Fold {fold.fold_index + 1}: {len(fold.train_image_ids)} train / {len(fold.val_image_ids)} val")
    return folds


def write_folds(folds: List[FoldSpec], manifest: DatasetManifest, out_dir) -> List[Path]:
    """Writes fold<i>_train.txt and fold<i>_val.txt (1-based), ids in manifest order."""

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    order = manifest.image_ids()

    written = []
    for fold in folds:
        for side, ids in (("train", fold.train_image_ids), ("val", fold.val_image_ids)):
            path = out_dir / f"fold{fold.fold_index + 1}_{side}.txt"
            write_image_list(path, [image_id for image_id in order if image_id in ids])
            written.append(path)
    return written


def fold_summary(folds: List[FoldSpec]) -> List[Tuple[int, int, int]]:
    """(fold number, train count, validation count) per fold."""

    return [(f.fold_index + 1, len(f.train_image_ids), len(f.val_image_ids)) for f in folds]


def audit_boxes(image_id: str, gts: List[GroundTruthBox], names: Tuple[str, ...], iou_threshold: float) -> List[LabelAnomaly]:
    """Audits the ground truth of one image."""

    anomalies = []
    for i, gt in enumerate(gts):
        if area(gt.bbox) == 0.0:
            anomalies.append(LabelAnomaly(image_id, AnomalyKind.DEGENERATE, i, None, names[gt.class_id], None, None))

    ious = iou_matrix([gt.bbox for gt in gts], [gt.bbox for gt in gts])
    for i in range(len(gts)):
        for j in range(i + 1, len(gts)):
            overlap = float(ious[i, j])
            if overlap <= iou_threshold:
                continue
            kind = AnomalyKind.DOUBLE_LABEL if gts[i].class_id == gts[j].class_id else AnomalyKind.CONFLICTING_LABEL
            anomalies.append(LabelAnomaly(image_id, kind, i, j, names[gts[i].class_id], names[gts[j].class_id], overlap))
    return anomalies


def audit_labels(manifest: DatasetManifest, iou_threshold: float = DEFAULT_AUDIT_IOU) -> List[LabelAnomaly]:
    """Flags double labels, conflicting labels and degenerate boxes.

    Two boxes of one image form a double label when IoU > iou_threshold and the classes match,
    and a conflicting label when the classes differ.
    """

    if not 0.0 <= iou_threshold < 1.0:
        raise InvalidArgumentError(f"Audit IoU threshold must lie in [0, 1), got {iou_threshold}")

    anomalies = []
    for record in manifest:
        anomalies.extend(audit_boxes(record.image_id, manifest.read_ground_truth(record), manifest.classes.names, iou_threshold))

    logger.debug(f"Audited {len(manifest)} images, {len(anomalies)} anomalies")
    return anomalies
