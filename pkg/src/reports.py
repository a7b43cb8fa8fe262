"""Report rendering

Rich tables for the terminal, plus JSON and CSV forms of every report.
"""

# Stdlib imports
import csv
import io
import json
import os
import re
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Third-party modules
from rich.console import Console, Group
from rich.table import Table
from rich.text import Text

# Custom modules
from src.dataset import ClassStats, LabelAnomaly
from src.evaluation import EvalReport
from src.simulate import ExperimentReport

SCHEMA_VERSION = 1


def render_to_text(renderable, width: int = 120) -> str:
    """Renders a rich object to plain text."""

    console = Console(file=io.StringIO(), width=width, color_system=None, highlight=False)
    console.print(renderable)
    return console.file.getvalue()


def _fmt(value: Optional[float], digits: int = 3) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def _threshold_label(threshold: float) -> str:
    return f"{threshold:.2f}"


def _range_label(thresholds: Sequence[float]) -> str:
    step = thresholds[1] - thresholds[0]
    return f"{thresholds[0]:.2f}:{thresholds[-1]:.2f}:{step:.2f}"


def _titled(title: str, *renderables) -> Group:
    """Puts a one-line heading above the renderables."""

    return Group(Text(title, style="bold"), *renderables)


""" Evaluation """


def render_eval_report(report: EvalReport) -> Group:
    primary = report.iou_thresholds[0]
    is_range = len(report.iou_thresholds) > 1
    title = f"Evaluation{f' of {report.model_name}' if report.model_name else ''}"

    classes = Table()
    classes.add_column("Class")
    classes.add_column("GT", justify="right")
    classes.add_column("Pred", justify="right")
    classes.add_column(f"AP@{_threshold_label(primary)}", justify="right")
    if is_range:
        classes.add_column(f"AP@[{_range_label(report.iou_thresholds)}]", justify="right")
    classes.add_column(f"P@{report.confidence_threshold:g}", justify="right")
    classes.add_column(f"R@{report.confidence_threshold:g}", justify="right")

    for row in report.classes:
        if row.gt_count == 0 and row.pred_count == 0:
            continue
        cells = [row.name, str(row.gt_count), str(row.pred_count), _fmt(row.ap)]
        if is_range:
            cells.append(_fmt(row.ap_range_mean))
        cells += [_fmt(row.precision), _fmt(row.recall)]
        classes.add_row(*cells)

    summary = Table(title="mAP")
    summary.add_column("IoU threshold", justify="right")
    summary.add_column("mAP", justify="right")
    for threshold, value in report.map_by_threshold:
        summary.add_row(_threshold_label(threshold), _fmt(value, 4))
    if is_range:
        summary.add_row(f"mean {_range_label(report.iou_thresholds)}", _fmt(report.map_mean, 4), style="bold")

    footer = [f"confidence threshold {report.confidence_threshold:g}",
              "interpolated AP (101 points)" if report.interpolated else "AP: rectangle sum",
              f"generated {report.timestamp}"]
    if report.inference_time is not None:
        footer.append(f"inference time {report.inference_time:g} s")
    if report.excluded_classes:
        footer.append(f"excluded (no ground truth): {', '.join(report.excluded_classes)}")
    return _titled(title, classes, summary, Text("; ".join(footer)))


def eval_report_to_dict(report: EvalReport) -> Dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": {
            "model_name": report.model_name,
            "iou_thresholds": list(report.iou_thresholds),
            "confidence_threshold": report.confidence_threshold,
            "interpolated": report.interpolated,
            "timestamp": report.timestamp,
            "inference_time": report.inference_time,
        },
        "classes": [
            {
                "class_id": row.class_id,
                "name": row.name,
                "ap": row.ap,
                "ap_range_mean": row.ap_range_mean,
                "gt_count": row.gt_count,
                "pred_count": row.pred_count,
                "precision": row.precision,
                "recall": row.recall,
            }
            for row in report.classes
        ],
        "map": [{"iou_threshold": t, "map": value} for t, value in report.map_by_threshold],
        "map_mean": report.map_mean,
        "excluded_classes": list(report.excluded_classes),
    }


def eval_report_to_json(report: EvalReport) -> str:
    return json.dumps(eval_report_to_dict(report), indent=2)


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name).strip("_") or "class"


def write_curves_csv(report: EvalReport, out_dir) -> List[Path]:
    """Writes one CSV per class with ground truth: threshold, recall, precision."""

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for row in report.classes:
        curve = report.curves.get(row.class_id)
        if curve is None or not curve.recall_defined:
            continue
        path = out_dir / f"{row.class_id:02d}_{_safe_name(row.name)}.csv"
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["threshold", "recall", "precision"])
            for values in zip(curve.thresholds, curve.recalls, curve.precisions):
                writer.writerow([f"{v:.6f}" for v in values])
        written.append(path)
    return written


""" Comparison """


def render_comparison(reports: Sequence[EvalReport]) -> Group:
    """Model-versus-model table: name, mAP at the primary threshold, inference time if known."""

    primary = reports[0].iou_thresholds[0] if reports else 0.5
    table = Table()
    table.add_column("Model Name")
    table.add_column(f"mAP@{primary:g}", justify="right")
    if len(reports) and len(reports[0].iou_thresholds) > 1:
        table.add_column(f"mAP@[{_range_label(reports[0].iou_thresholds)}]", justify="right")
    table.add_column("Inference Time (s)", justify="right")
    for report in reports:
        cells = [report.model_name, _fmt(report.map_primary)]
        if len(report.iou_thresholds) > 1:
            cells.append(_fmt(report.map_mean))
        cells.append(_fmt(report.inference_time, 2))
        table.add_row(*cells)
    return _titled("Comparison of performance and inference time", table)


def comparison_to_json(reports: Sequence[EvalReport]) -> str:
    document = {
        "schema_version": SCHEMA_VERSION,
        "models": [eval_report_to_dict(report) for report in reports],
    }
    return json.dumps(document, indent=2)


""" Dataset """


def render_class_stats(stats: ClassStats) -> Group:
    table = Table()
    table.add_column("Class Name")
    table.add_column("Label Count", justify="right")
    for name, count in zip(stats.names, stats.counts):
        table.add_row(name, str(count))
    table.add_row("Total", str(stats.total), style="bold")
    return _titled("Sample Distribution per Class", table)


def class_stats_to_csv(stats: ClassStats) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["class_id", "class_name", "label_count"])
    for class_id, (name, count) in enumerate(zip(stats.names, stats.counts)):
        writer.writerow([class_id, name, count])
    return buffer.getvalue()


def render_folds(summary: Sequence[Tuple[int, int, int]]) -> Group:
    table = Table()
    table.add_column("Fold No.", justify="right")
    table.add_column("Train Set Image Count", justify="right")
    table.add_column("Validation Set Image Count", justify="right")
    for fold, train, val in summary:
        table.add_row(str(fold), str(train), str(val))
    return _titled("Train/validation split", table)


def render_anomalies(anomalies: Sequence[LabelAnomaly]) -> Group:
    table = Table()
    table.add_column("Image")
    table.add_column("Category")
    table.add_column("Boxes")
    table.add_column("Classes")
    table.add_column("IoU", justify="right")
    for a in anomalies:
        boxes = str(a.first_index) if a.second_index is None else f"{a.first_index}, {a.second_index}"
        classes = a.first_class if a.second_class is None else f"{a.first_class} / {a.second_class}"
        table.add_row(a.image_id, a.kind.value, boxes, classes, _fmt(a.iou))
    footer = Text(f"{len(anomalies)} anomal{'y' if len(anomalies) == 1 else 'ies'}")
    return _titled("Label anomalies", table, footer) if anomalies else Group(footer)


def anomalies_to_json(anomalies: Sequence[LabelAnomaly]) -> str:
    document = {
        "schema_version": SCHEMA_VERSION,
        "anomalies": [
            {
                "image_id": a.image_id,
                "category": a.kind.value,
                "boxes": [a.first_index] if a.second_index is None else [a.first_index, a.second_index],
                "classes": [a.first_class] if a.second_class is None else [a.first_class, a.second_class],
                "iou": a.iou,
            }
            for a in anomalies
        ],
    }
    return json.dumps(document, indent=2)


""" Experiment """


def render_experiment(report: ExperimentReport) -> Group:
    is_range = len(report.iou_thresholds) > 1
    title = f"Synthetic ensembling experiment ({report.image_count} images x {len(report.runs)} runs)"
    table = Table()
    table.add_column("Model Name")
    table.add_column(f"mAP@{report.iou_thresholds[0]:g}", justify="right")
    if is_range:
        table.add_column(f"mAP@[{_range_label(report.iou_thresholds)}]", justify="right")
    for row in report.rows:
        cells = [row.name, _fmt(row.map_primary, 4)]
        if is_range:
            cells.append(_fmt(row.map_range_mean, 4))
        table.add_row(*cells)
    tally = Text(f"ensemble vs best single detector: {report.wins} win(s), {report.losses} loss(es), {report.ties} tie(s)")
    return _titled(title, table, tally)


def experiment_to_json(report: ExperimentReport) -> str:
    document = {
        "schema_version": SCHEMA_VERSION,
        "iou_thresholds": list(report.iou_thresholds),
        "image_count": report.image_count,
        "rows": [{"name": r.name, "map": r.map_primary, "map_range_mean": r.map_range_mean} for r in report.rows],
        "runs": [{"seed": r.seed, "single_maps": list(r.single_maps), "fused_map": r.fused_map, "outcome": r.outcome}
                 for r in report.runs],
        "tally": {"wins": report.wins, "losses": report.losses, "ties": report.ties},
    }
    return json.dumps(document, indent=2)
