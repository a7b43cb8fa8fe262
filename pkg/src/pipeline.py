"""Toolkit pipeline

Contains the directory-level stages that the CLI drives: reading prediction directories,
fusing them, and scoring them against a manifest.

Prediction directories hold one <image_id>.txt file per image; files pair up across
directories by filename stem.
"""

# Stdlib imports
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Custom modules
from src.customErrors import InputError, InvalidArgumentError, MissingPredictionFilesError
from src.dataset import FoldSpec, split_folds, write_folds
from src.detio import Detection, load_manifest, read_prediction_file, write_prediction_file
from src.evaluation import EvalReport, IouSpec, evaluate_dataset
from src.logger import logger
from src.nms import FusionConfig, ensemble_fuse

THREADS_ENV = "NMSENS_THREADS"
PREDICTION_SUFFIX = ".txt"


def resolve_threads(threads: Optional[int] = None) -> int:
    """Worker count: explicit value, else NMSENS_THREADS, else 1."""

    if threads is None:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            threads = int(raw)
        except ValueError:
            raise InvalidArgumentError(f"{THREADS_ENV} must be an integer, got '{raw}'") from None
    if threads < 1:
        raise InvalidArgumentError(f"Thread count must be at least 1, got {threads}")
    return threads


def prediction_files(pred_dir) -> Dict[str, Path]:
    """Maps image id (filename stem) to prediction file."""

    pred_dir = Path(pred_dir)
    if not pred_dir.is_dir():
        raise InputError(f"Not a directory: {pred_dir}")
    return {path.stem: path for path in sorted(pred_dir.glob(f"*{PREDICTION_SUFFIX}"))}


def load_predictions_dir(pred_dir, model_id: int = 0, class_count: Optional[int] = None) -> Dict[str, List[Detection]]:
    """Reads every prediction file of a directory."""

    predictions = {stem: read_prediction_file(path, model_id, class_count) for stem, path in prediction_files(pred_dir).items()}
    logger.debug(f"Read {len(predictions)} prediction files from {pred_dir}")
    return predictions


def fuse_directories(input_dirs: Sequence, out_dir, cfg: FusionConfig, threads: int = 1) -> Dict[str, int]:
    """Fuses per-image predictions of several models. model_id is the directory's position.

    Raises:
        MissingPredictionFilesError: An image file is missing from some directories.

    Returns:
        Dict[str, int]: Number of fused detections per image id.
    """

    if not input_dirs:
        raise InvalidArgumentError("At least one input directory is required")

    files = [prediction_files(d) for d in input_dirs]
    all_stems = sorted(set().union(*files))
    missing = {str(d): [stem + PREDICTION_SUFFIX for stem in all_stems if stem not in f] for d, f in zip(input_dirs, files)}
    missing = {d: names for d, names in missing.items() if names}
    if missing:
        raise MissingPredictionFilesError(missing)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def fuse_image(stem: str) -> Tuple[str, int]:
        per_model = [read_prediction_file(f[stem], model_id) for model_id, f in enumerate(files)]
        fused = ensemble_fuse(per_model, cfg)
        write_prediction_file(out_dir / f"{stem}{PREDICTION_SUFFIX}", fused)
        return stem, len(fused)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        counts = dict(executor.map(fuse_image, all_stems))

    logger.info(f"Fused {len(input_dirs)} model(s) over {len(all_stems)} image(s): {sum(counts.values())} detections kept")
    return counts


def evaluate_directory(pred_dir,
                       manifest_path,
                       iou_spec: IouSpec,
                       confidence_threshold: float = 0.0,
                       interpolated: bool = False,
                       model_name: str = "",
                       inference_time: Optional[float] = None) -> EvalReport:
    """Scores a prediction directory against the ground truth of a manifest."""

    manifest = load_manifest(manifest_path)
    predictions = load_predictions_dir(pred_dir, class_count=len(manifest.classes))
    return evaluate_dataset(manifest, predictions, iou_spec, confidence_threshold, interpolated,
                            model_name or Path(pred_dir).name, inference_time)


def compare_directories(named_dirs: Sequence[Tuple[str, str]],
                        manifest_path,
                        iou_spec: IouSpec,
                        confidence_threshold: float = 0.0,
                        inference_times: Optional[Dict[str, float]] = None) -> List[EvalReport]:
    """Evaluates several named prediction directories against one manifest."""

    inference_times = inference_times or {}
    unknown = set(inference_times) - {name for name, _ in named_dirs}
    if unknown:
        raise InvalidArgumentError(f"Inference time given for unknown model(s): {', '.join(sorted(unknown))}")

    manifest = load_manifest(manifest_path)
    reports = []
    for name, pred_dir in named_dirs:
        predictions = load_predictions_dir(pred_dir, class_count=len(manifest.classes))
        reports.append(evaluate_dataset(manifest, predictions, iou_spec, confidence_threshold,
                                        model_name=name, inference_time=inference_times.get(name)))
    return reports


def split_manifest(manifest_path, k: int, seed: int, out_dir, only_tag: Optional[str] = None) -> List[FoldSpec]:
    """Splits a manifest into grouped folds and writes the fold lists."""

    manifest = load_manifest(manifest_path)
    folds = split_folds(manifest, k, seed, only_tag)
    written = write_folds(folds, manifest, out_dir)
    logger.info(f"Wrote {len(written)} fold lists to {out_dir}")
    return folds
