"""Detection evaluation

Prediction-to-ground-truth matching, precision-recall curves, average precision per class and
mean average precision, at a single IoU threshold or over a range of thresholds.

AP is the rectangle sum over the confidence thresholds tau_0 < ... < tau_{n-1}:

    AP = sum_k (Recall(k) - Recall(k+1)) * Precision(k),  with Recall(n) = 0, Precision(n) = 1

mAP is the arithmetic mean of AP over the classes that have ground truth.
"""

# Future imports
from __future__ import annotations

# Stdlib imports
import math
import os
import sys
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Third-party modules
import numpy as np

# Custom modules
from src.customErrors import InvalidArgumentError, UndefinedMetricError, UnknownClassError, UnknownImageError
from src.detio import DatasetManifest, Detection, GroundTruthBox
from src.geometry import iou_matrix
from src.logger import logger
from src.nms import filter_by_confidence

DEFAULT_EVAL_IOU = 0.5
INTERPOLATION_POINTS = 101


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching ranked predictions against ground truth.

    Attributes:
        is_tp (Tuple[bool, ...]): One flag per prediction, ranked by descending confidence.
        matched_gt_index (Tuple[Optional[int], ...]): Matched ground-truth index per prediction.
        confidences (Tuple[float, ...]): Confidence per prediction, same order.
        total_gt_count (int): Ground-truth boxes available to match.
    """

    is_tp: Tuple[bool, ...]
    matched_gt_index: Tuple[Optional[int], ...]
    confidences: Tuple[float, ...]
    total_gt_count: int

    @property
    def tp_count(self) -> int:
        return sum(self.is_tp)

    @classmethod
    def merge(cls, results: Sequence[MatchResult]) -> MatchResult:
        """Pools results of several images. Ground-truth indices stay image-local."""

        return cls(
            tuple(flag for r in results for flag in r.is_tp),
            tuple(index for r in results for index in r.matched_gt_index),
            tuple(conf for r in results for conf in r.confidences),
            sum(r.total_gt_count for r in results),
        )


@dataclass(frozen=True)
class PRCurve:
    """Precision and recall per distinct confidence threshold, thresholds ascending."""

    thresholds: Tuple[float, ...]
    recalls: Tuple[float, ...]
    precisions: Tuple[float, ...]
    total_gt_count: int

    # Values past the last threshold
    END_RECALL = 0.0
    END_PRECISION = 1.0

    def __len__(self) -> int:
        return len(self.thresholds)

    @property
    def recall_defined(self) -> bool:
        return self.total_gt_count > 0


@dataclass(frozen=True)
class IouSpec:
    """IoU thresholds an evaluation runs at. The first one is the primary threshold."""

    thresholds: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.thresholds:
            raise InvalidArgumentError("At least one IoU threshold is required")
        for t in self.thresholds:
            if not 0.0 < t <= 1.0:
                raise InvalidArgumentError(f"IoU threshold must lie in (0, 1], got {t}")

    @classmethod
    def single(cls, threshold: float = DEFAULT_EVAL_IOU) -> IouSpec:
        return cls((threshold,))

    @classmethod
    def range(cls, lo: float, hi: float, step: float) -> IouSpec:
        return cls(tuple(iou_range_thresholds(lo, hi, step)))

    @classmethod
    def parse(cls, text: str) -> IouSpec:
        """Parses '0.5' or 'lo:hi:step'."""

        parts = text.split(":")
        try:
            values = [float(part) for part in parts]
        except ValueError:
            raise InvalidArgumentError(f"Invalid IoU specification '{text}'") from None
        if len(values) == 1:
            return cls.single(values[0])
        if len(values) == 3:
            return cls.range(*values)
        raise InvalidArgumentError(f"IoU range must look like lo:hi:step, got '{text}'")

    @property
    def primary(self) -> float:
        return self.thresholds[0]

    @property
    def is_range(self) -> bool:
        return len(self.thresholds) > 1


@dataclass(frozen=True)
class ClassEvaluation:
    """AP of one class at one IoU threshold. ap is None when the class has no ground truth."""

    class_id: int
    ap: Optional[float]
    gt_count: int
    pred_count: int
    curve: PRCurve


@dataclass(frozen=True)
class IouRangeResult:
    entries: Tuple[Tuple[float, float], ...]
    mean: float


@dataclass(frozen=True)
class ClassResult:
    """Per-class row of an EvalReport."""

    class_id: int
    name: str
    ap: Optional[float]
    ap_range_mean: Optional[float]
    gt_count: int
    pred_count: int
    precision: float
    recall: float


@dataclass(frozen=True)
class EvalReport:
    """Whole-dataset evaluation result."""

    model_name: str
    classes: Tuple[ClassResult, ...]
    map_by_threshold: Tuple[Tuple[float, float], ...]
    map_mean: float
    iou_thresholds: Tuple[float, ...]
    confidence_threshold: float
    interpolated: bool
    timestamp: str
    excluded_classes: Tuple[str, ...] = ()
    inference_time: Optional[float] = None
    curves: Dict[int, PRCurve] = field(default_factory=dict, compare=False)

    @property
    def map_primary(self) -> float:
        return self.map_by_threshold[0][1]


""" Matching and curves """


def match_detections(preds: Sequence[Detection], gts: Sequence[GroundTruthBox], iou_threshold: float) -> MatchResult:
    """Matches predictions of one image and one class against its ground truth.

    Predictions are processed by descending confidence (ties by input order). Each one takes the
    unmatched ground-truth box with the highest IoU if that IoU >= iou_threshold (ties go to the
    lowest ground-truth index), otherwise it is a false positive.
    """

    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    ranked = [preds[i] for i in order]
    ious = iou_matrix([p.bbox for p in ranked], [g.bbox for g in gts])

    matched = np.zeros(len(gts), dtype=bool)
    flags: List[bool] = []
    indices: List[Optional[int]] = []
    for rank in range(len(ranked)):
        if len(gts) == 0:
            flags.append(False)
            indices.append(None)
            continue
        candidates = np.where(matched, -1.0, ious[rank])
        best = int(np.argmax(candidates))
        if candidates[best] >= iou_threshold:
            matched[best] = True
            flags.append(True)
            indices.append(best)
        else:
            flags.append(False)
            indices.append(None)

    return MatchResult(tuple(flags), tuple(indices), tuple(p.confidence for p in ranked), len(gts))


def pr_curve(match: MatchResult, confidences: Optional[Sequence[float]] = None) -> PRCurve:
    """Builds the precision-recall curve, one point per distinct confidence value.

    At threshold tau_k, precision and recall count the predictions with confidence >= tau_k.
    Without ground truth the curve is flagged as undefined-recall and recalls are 0.
    """

    conf = np.asarray(match.confidences if confidences is None else confidences, dtype=np.float64)
    flags = np.asarray(match.is_tp, dtype=bool)
    if len(conf) != len(flags):
        raise InvalidArgumentError(f"Got {len(conf)} confidences for {len(flags)} predictions")

    if len(conf) == 0:
        return PRCurve((), (), (), match.total_gt_count)

    order = np.argsort(-conf, kind="stable")
    cum_tp = np.cumsum(flags[order])
    ascending = np.sort(conf)
    thresholds = np.unique(conf)

    # predictions with confidence >= t
    counts = len(conf) - np.searchsorted(ascending, thresholds, side="left")
    tps = cum_tp[counts - 1]

    precisions = tps / counts
    if match.total_gt_count > 0:
        recalls = tps / match.total_gt_count
    else:
        recalls = np.zeros(len(thresholds))

    return PRCurve(
        tuple(float(t) for t in thresholds),
        tuple(float(r) for r in recalls),
        tuple(float(p) for p in precisions),
        match.total_gt_count,
    )


def average_precision(curve: PRCurve, interpolated: bool = False) -> float:
    """Average precision of a curve.

    Default is the literal rectangle sum with Recall(n) = 0. The interpolated mode takes the
    precision envelope at 101 evenly spaced recall levels, for comparison with other tools.
    """

    if len(curve) == 0:
        return 0.0

    recalls = np.asarray(curve.recalls, dtype=np.float64)
    precisions = np.asarray(curve.precisions, dtype=np.float64)

    if interpolated:
        levels = np.linspace(0.0, 1.0, INTERPOLATION_POINTS)
        sampled = [float(precisions[recalls >= level].max()) if np.any(recalls >= level) else 0.0 for level in levels]
        return float(min(1.0, max(0.0, np.mean(sampled))))

    next_recalls = np.append(recalls[1:], PRCurve.END_RECALL)
    ap = float(np.sum((recalls - next_recalls) * precisions))
    return min(1.0, max(0.0, ap))


def precision_recall_at(curve: PRCurve, tau: float) -> Tuple[float, float]:
    """Precision and recall of the predictions with confidence >= tau.

    With no such prediction, returns the end-of-curve convention (1, 0).
    """

    for k, threshold in enumerate(curve.thresholds):
        if threshold >= tau:
            return curve.precisions[k], curve.recalls[k]
    return PRCurve.END_PRECISION, PRCurve.END_RECALL


""" Aggregation """


def mean_average_precision(per_class_ap: Union[Sequence[Optional[float]], Mapping[int, Optional[float]]]) -> float:
    """Mean of the per-class APs. Entries that are None (no ground truth) are excluded."""

    values = per_class_ap.values() if isinstance(per_class_ap, Mapping) else per_class_ap
    included = [ap for ap in values if ap is not None]
    if not included:
        raise UndefinedMetricError("mAP is undefined: no class has ground truth")
    return sum(included) / len(included)


def iou_range_thresholds(lo: float, hi: float, step: float) -> List[float]:
    """Thresholds lo, lo+step, ... up to hi inclusive."""

    if not step > 0:
        raise InvalidArgumentError(f"IoU range step must be positive, got {step}")
    if not 0.0 < lo <= hi <= 1.0:
        raise InvalidArgumentError(f"IoU range must satisfy 0 < lo <= hi <= 1, got {lo}:{hi}")

    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [round(lo + k * step, 10) for k in range(count)]


def _group_by_class(boxes) -> Dict[int, list]:
    grouped: Dict[int, list] = defaultdict(list)
    for box in boxes:
        grouped[box.class_id].append(box)
    return grouped


def compute_class_aps(preds_by_image: Mapping[str, Sequence[Detection]],
                      gts_by_image: Mapping[str, Sequence[GroundTruthBox]],
                      iou_threshold: float,
                      class_count: Optional[int] = None,
                      interpolated: bool = False) -> List[ClassEvaluation]:
    """Per-class AP with matching per image and curves pooled over all images.

    Args:
        preds_by_image: Detections keyed by image id.
        gts_by_image: Ground truth keyed by image id.
        iou_threshold (float): Matching threshold.
        class_count (int): Number of classes; inferred from the data when None.
        interpolated (bool): Use the 101-point interpolated AP.

    Returns:
        List[ClassEvaluation]: One entry per class id.
    """

    if class_count is None:
        ids = [b.class_id for boxes in list(preds_by_image.values()) + list(gts_by_image.values()) for b in boxes]
        class_count = max(ids) + 1 if ids else 0

    per_class: Dict[int, List[MatchResult]] = defaultdict(list)
    pred_counts: Dict[int, int] = defaultdict(int)
    for image_id in sorted(set(preds_by_image) | set(gts_by_image)):
        preds = _group_by_class(preds_by_image.get(image_id, ()))
        gts = _group_by_class(gts_by_image.get(image_id, ()))
        for class_id in set(preds) | set(gts):
            per_class[class_id].append(match_detections(preds.get(class_id, []), gts.get(class_id, []), iou_threshold))
            pred_counts[class_id] += len(preds.get(class_id, []))

    results = []
    for class_id in range(class_count):
        merged = MatchResult.merge(per_class.get(class_id, []))
        curve = pr_curve(merged)
        ap = average_precision(curve, interpolated) if curve.recall_defined else None
        results.append(ClassEvaluation(class_id, ap, merged.total_gt_count, pred_counts[class_id], curve))
    return results


def map_over_iou_range(preds_by_image: Mapping[str, Sequence[Detection]],
                       gts_by_image: Mapping[str, Sequence[GroundTruthBox]],
                       lo: float,
                       hi: float,
                       step: float,
                       class_count: Optional[int] = None,
                       interpolated: bool = False) -> IouRangeResult:
    """mAP at each threshold lo, lo+step, ..., hi, and the mean over them."""

    entries = []
    for threshold in iou_range_thresholds(lo, hi, step):
        evaluations = compute_class_aps(preds_by_image, gts_by_image, threshold, class_count, interpolated)
        entries.append((threshold, mean_average_precision([e.ap for e in evaluations])))
    return IouRangeResult(tuple(entries), sum(value for _, value in entries) / len(entries))


def report_timestamp() -> str:
    """UTC timestamp of a report. Honours SOURCE_DATE_EPOCH for reproducible output."""

    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.replace(microsecond=0).isoformat()


def evaluate_predictions(manifest: DatasetManifest,
                         predictions_by_image: Mapping[str, Sequence[Detection]],
                         gts_by_image: Mapping[str, Sequence[GroundTruthBox]],
                         iou_spec: IouSpec,
                         confidence_threshold: float = 0.0,
                         interpolated: bool = False,
                         model_name: str = "",
                         inference_time: Optional[float] = None) -> EvalReport:
    """Builds an EvalReport from predictions and already loaded ground truth."""

    unknown = set(predictions_by_image) - set(manifest.image_ids())
    if unknown:
        raise UnknownImageError(unknown)

    class_count = len(manifest.classes)
    for image_id, dets in predictions_by_image.items():
        for det in dets:
            if det.class_id >= class_count:
                raise UnknownClassError(f"Image '{image_id}': class id {det.class_id} outside class table of size {class_count}")

    preds = {image_id: filter_by_confidence(dets, confidence_threshold) for image_id, dets in predictions_by_image.items()}

    per_threshold = [compute_class_aps(preds, gts_by_image, t, class_count, interpolated) for t in iou_spec.thresholds]
    map_by_threshold = tuple((t, mean_average_precision([e.ap for e in evaluations]))
                             for t, evaluations in zip(iou_spec.thresholds, per_threshold))

    primary = per_threshold[0]
    rows = []
    for evaluation in primary:
        range_aps = [evaluations[evaluation.class_id].ap for evaluations in per_threshold]
        range_mean = None if evaluation.ap is None else sum(range_aps) / len(range_aps)
        precision, recall = precision_recall_at(evaluation.curve, confidence_threshold)
        rows.append(ClassResult(
            evaluation.class_id,
            manifest.classes.name(evaluation.class_id),
            evaluation.ap,
            range_mean,
            evaluation.gt_count,
            evaluation.pred_count,
            precision,
            recall,
        ))

    excluded = tuple(row.name for row in rows if row.ap is None)
    report = EvalReport(
        model_name=model_name,
        classes=tuple(rows),
        map_by_threshold=map_by_threshold,
        map_mean=sum(value for _, value in map_by_threshold) / len(map_by_threshold),
        iou_thresholds=iou_spec.thresholds,
        confidence_threshold=confidence_threshold,
        interpolated=interpolated,
        timestamp=report_timestamp(),
        excluded_classes=excluded,
        inference_time=inference_time,
        curves={e.class_id: e.curve for e in primary},
    )
    logger.debug(f"Evaluated {len(manifest)} images: mAP@{iou_spec.primary:g} = {report.map_primary:.4f}")
    return report


def evaluate_dataset(manifest: DatasetManifest,
                     predictions_by_image: Mapping[str, Sequence[Detection]],
                     iou_spec: IouSpec,
                     confidence_threshold: float = 0.0,
                     interpolated: bool = False,
                     model_name: str = "",
                     inference_time: Optional[float] = None) -> EvalReport:
    """Scores predictions against the ground truth of every manifest image.

    Raises:
        UnknownImageError: Predictions for images missing from the manifest.
        UnknownClassError: Predictions with class ids outside the class table.
        UndefinedMetricError: No class has ground truth.
    """

    gts_by_image = {record.image_id: manifest.read_ground_truth(record) for record in manifest}
    return evaluate_predictions(manifest, predictions_by_image, gts_by_image, iou_spec,
                                confidence_threshold, interpolated, model_name, inference_time)
