"""Synthetic scenes and detectors

Seeded synthetic ground truth and noisy detector models, used to reproduce the benefit of NMS
ensembling over single detectors without trained networks.

Randomness is counter based: every (seed, image, model, box) tuple owns its own Philox stream,
so any image or model can be generated alone, in any order, with identical results.
"""

# Future imports
from __future__ import annotations

# Stdlib imports
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Third-party modules
import numpy as np
import tomli

# Custom modules
from src.customErrors import ConfigError, InputError, InvalidArgumentError, SceneGenerationError
from src.detio import (
    ClassTable,
    DatasetManifest,
    Detection,
    GroundTruthBox,
    ImageRecord,
    write_label_file,
    write_manifest,
    write_prediction_file,
)
from src.evaluation import IouSpec, compute_class_aps, mean_average_precision
from src.geometry import BBox, iou
from src.logger import logger
from src.nms import FusionConfig, ensemble_fuse
from src.predefinedClasses import dhaka_ai_class_names, dhaka_ai_class_weights

MAX_PLACEMENT_ATTEMPTS = 100
IMAGE_SIZE = 1024

# Stream lanes
_SCENE_LANE = 0
_FALSE_POSITIVE_LANE = 2 ** 32


def _stream(seed: int, seed_offset: int, image_index: int, model_lane: int, box_lane: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=[seed, seed_offset], counter=[0, box_lane, model_lane, image_index]))


def _check_range(values: Tuple[float, float], name: str, lo: float = 0.0, hi: Optional[float] = None) -> None:
    if len(values) != 2 or values[0] > values[1] or values[0] < lo or (hi is not None and values[1] > hi):
        raise InvalidArgumentError(f"{name} must be a non-empty range within [{lo}, {hi}], got {values}")


@dataclass(frozen=True)
class SceneConfig:
    """Synthetic ground-truth settings.

    Attributes:
        image_count (int): Images per dataset.
        boxes_per_image (Tuple[int, int]): Inclusive range of boxes per image.
        class_weights (Tuple[float, ...]): Class sampling weights; DhakaAI label counts when None.
        box_size (Tuple[float, float]): Range of normalized widths and heights.
        overlap_allowance (float): Maximum IoU between two generated boxes.
        seed (int): Base seed.
        class_names (Tuple[str, ...]): Names written to materialized manifests.
    """

    image_count: int = 200
    boxes_per_image: Tuple[int, int] = (3, 10)
    class_weights: Optional[Tuple[float, ...]] = None
    box_size: Tuple[float, float] = (0.08, 0.3)
    overlap_allowance: float = 0.3
    seed: int = 42
    class_names: Optional[Tuple[str, ...]] = None

    def __post_init__(self) -> None:
        if self.image_count < 0:
            raise InvalidArgumentError(f"image_count must be non-negative, got {self.image_count}")
        _check_range(self.boxes_per_image, "boxes_per_image")
        _check_range(self.box_size, "box_size", 0.0, 1.0)
        if self.box_size[0] <= 0:
            raise InvalidArgumentError(f"box_size must be positive, got {self.box_size}")
        if not 0.0 <= self.overlap_allowance <= 1.0:
            raise InvalidArgumentError(f"overlap_allowance must lie in [0, 1], got {self.overlap_allowance}")
        if self.seed < 0:
            raise InvalidArgumentError(f"seed must be non-negative, got {self.seed}")
        weights = self.weights
        if any(w < 0 for w in weights) or sum(weights) <= 0:
            raise InvalidArgumentError("class_weights must be non-negative with a positive sum")
        if self.class_names is not None and len(self.class_names) != len(weights):
            raise InvalidArgumentError(f"Got {len(self.class_names)} class names for {len(weights)} class weights")

    @property
    def weights(self) -> Tuple[float, ...]:
        if self.class_weights is None:
            return tuple(dhaka_ai_class_weights())
        return tuple(self.class_weights)

    @property
    def class_count(self) -> int:
        return len(self.weights)

    def names(self) -> Tuple[str, ...]:
        if self.class_names is not None:
            return self.class_names
        if self.class_weights is None:
            return tuple(dhaka_ai_class_names())
        return tuple(f"class_{i}" for i in range(self.class_count))


@dataclass(frozen=True)
class ConfidenceModel:
    """Maps match quality to confidence.

    A true detection scores clamp(base - penalty * (1 - IoU with its object) + noise, 0, 1),
    noise ~ N(0, noise_sigma). False positives score uniformly in [fp_low, fp_high].
    """

    base: float = 0.9
    penalty: float = 0.5
    noise_sigma: float = 0.05
    fp_low: float = 0.05
    fp_high: float = 0.45

    def __post_init__(self) -> None:
        if self.noise_sigma < 0 or self.penalty < 0:
            raise InvalidArgumentError("confidence penalty and noise_sigma must be non-negative")
        _check_range((self.fp_low, self.fp_high), "fp confidence", 0.0, 1.0)


@dataclass(frozen=True)
class DetectorProfile:
    """Noise profile of one synthetic detector."""

    name: str = "detector"
    miss_rate: float = 0.2
    jitter_sigma: float = 0.02
    false_positive_rate: float = 0.5
    class_confusion_rate: float = 0.02
    confidence: ConfidenceModel = field(default_factory=ConfidenceModel)
    fp_box_size: Tuple[float, float] = (0.05, 0.3)
    seed_offset: int = 0

    def __post_init__(self) -> None:
        for name in ("miss_rate", "class_confusion_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {value}")
        if self.jitter_sigma < 0:
            raise InvalidArgumentError(f"jitter_sigma must be non-negative, got {self.jitter_sigma}")
        if self.false_positive_rate < 0:
            raise InvalidArgumentError(f"false_positive_rate must be non-negative, got {self.false_positive_rate}")
        if self.seed_offset < 0:
            raise InvalidArgumentError(f"seed_offset must be non-negative, got {self.seed_offset}")
        _check_range(self.fp_box_size, "fp_box_size", 0.0, 1.0)


def noiseless_profile(name: str = "noiseless", seed_offset: int = 0) -> DetectorProfile:
    """Finds every object exactly, at a constant confidence."""

    return DetectorProfile(name=name, miss_rate=0.0, jitter_sigma=0.0, false_positive_rate=0.0,
                           class_confusion_rate=0.0, confidence=ConfidenceModel(noise_sigma=0.0),
                           seed_offset=seed_offset)


def default_profiles(count: int = 4) -> Tuple[DetectorProfile, ...]:
    """The documented default detectors: independent, identically noisy."""

    return tuple(DetectorProfile(name=f"detector_{i + 1}", seed_offset=i) for i in range(count))


@dataclass(frozen=True)
class ExperimentConfig:
    scene: SceneConfig = field(default_factory=SceneConfig)
    detectors: Tuple[DetectorProfile, ...] = field(default_factory=default_profiles)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    iou_spec: IouSpec = field(default_factory=IouSpec.single)
    interpolated: bool = False
    runs: int = 1

    def __post_init__(self) -> None:
        if not self.detectors:
            raise InvalidArgumentError("At least one detector profile is required")
        names = [d.name for d in self.detectors]
        if len(set(names)) != len(names):
            raise InvalidArgumentError(f"Detector names must be unique, got {names}")
        if self.runs < 1:
            raise InvalidArgumentError(f"runs must be at least 1, got {self.runs}")


""" Generation """


def generate_scene(cfg: SceneConfig, image_index: int) -> List[GroundTruthBox]:
    """Ground truth of one synthetic image, deterministic for (cfg.seed, image_index)."""

    count_rng = _stream(cfg.seed, 0, image_index, _SCENE_LANE, 0)
    count = int(count_rng.integers(cfg.boxes_per_image[0], cfg.boxes_per_image[1] + 1))

    weights = np.asarray(cfg.weights, dtype=np.float64)
    probabilities = weights / weights.sum()
    lo, hi = cfg.box_size

    boxes: List[GroundTruthBox] = []
    for box_index in range(count):
        rng = _stream(cfg.seed, 0, image_index, _SCENE_LANE, box_index + 1)
        class_id = int(rng.choice(len(probabilities), p=probabilities))
        for _ in range(MAX_PLACEMENT_ATTEMPTS):
            w = rng.uniform(lo, hi)
            h = rng.uniform(lo, hi)
            x = rng.uniform(0.0, 1.0 - w)
            y = rng.uniform(0.0, 1.0 - h)
            candidate = BBox.clipped(x, y, x + w, y + h)
            if all(iou(candidate, other.bbox) <= cfg.overlap_allowance for other in boxes):
                boxes.append(GroundTruthBox(class_id, candidate))
                break
        else:
            raise SceneGenerationError(
                f"Could not place box {box_index + 1} of {count} in image {image_index} after "
                f"{MAX_PLACEMENT_ATTEMPTS} attempts; raise overlap_allowance, lower boxes_per_image or shrink box_size")
    return boxes


def _jitter(bbox: BBox, noise: np.ndarray) -> BBox:
    x0, y0, x1, y1 = (c + float(n) for c, n in zip(bbox.as_tuple(), noise))
    return BBox.clipped(min(x0, x1), min(y0, y1), max(x0, x1), max(y0, y1))


def simulate_detector(gts: Sequence[GroundTruthBox],
                      profile: DetectorProfile,
                      model_id: int,
                      image_index: int = 0,
                      seed: int = 0,
                      class_count: Optional[int] = None) -> List[Detection]:
    """Detections of one synthetic detector on one image.

    Every ground-truth box is missed with probability miss_rate, otherwise emitted with jittered
    corners and a quality-dependent confidence (and, with probability class_confusion_rate, a
    wrong class). Poisson(false_positive_rate) spurious low-confidence boxes are appended.
    Deterministic for (seed, profile.seed_offset, model_id, image_index).
    """

    if class_count is None:
        class_count = max((gt.class_id for gt in gts), default=0) + 1
    conf_model = profile.confidence
    model_lane = model_id + 1

    detections: List[Detection] = []
    for box_index, gt in enumerate(gts):
        rng = _stream(seed, profile.seed_offset, image_index, model_lane, box_index)
        # all draws happen before the miss decision, so streams stay aligned across miss rates
        missed = rng.random() < profile.miss_rate
        noise = rng.normal(0.0, 1.0, 4) * profile.jitter_sigma
        conf_noise = rng.normal(0.0, 1.0) * conf_model.noise_sigma
        confused = rng.random() < profile.class_confusion_rate
        wrong_class = int(rng.integers(0, max(1, class_count - 1)))
        if missed:
            continue

        bbox = _jitter(gt.bbox, noise)
        quality = iou(bbox, gt.bbox)
        confidence = min(1.0, max(0.0, conf_model.base - conf_model.penalty * (1.0 - quality) + conf_noise))

        class_id = gt.class_id
        if confused and class_count > 1:
            class_id = wrong_class if wrong_class < gt.class_id else wrong_class + 1
        detections.append(Detection(class_id, bbox, confidence, model_id))

    rng = _stream(seed, profile.seed_offset, image_index, model_lane, _FALSE_POSITIVE_LANE)
    for _ in range(int(rng.poisson(profile.false_positive_rate))):
        w = rng.uniform(*profile.fp_box_size)
        h = rng.uniform(*profile.fp_box_size)
        x = rng.uniform(0.0, 1.0 - w)
        y = rng.uniform(0.0, 1.0 - h)
        class_id = int(rng.integers(0, class_count))
        confidence = float(rng.uniform(conf_model.fp_low, conf_model.fp_high))
        detections.append(Detection(class_id, BBox.clipped(x, y, x + w, y + h), confidence, model_id))

    return detections


def image_id_for(index: int) -> str:
    return f"img_{index:05d}"


""" Experiment """


@dataclass(frozen=True)
class ExperimentRow:
    """One comparison row: mean mAP over runs at the primary threshold and over the IoU range."""

    name: str
    map_primary: float
    map_range_mean: float


@dataclass(frozen=True)
class RunOutcome:
    seed: int
    single_maps: Tuple[float, ...]
    fused_map: float

    @property
    def outcome(self) -> str:
        best = max(self.single_maps)
        if self.fused_map > best:
            return "win"
        if self.fused_map == best:
            return "tie"
        return "loss"


@dataclass(frozen=True)
class ExperimentReport:
    rows: Tuple[ExperimentRow, ...]
    runs: Tuple[RunOutcome, ...]
    iou_thresholds: Tuple[float, ...]
    image_count: int

    @property
    def wins(self) -> int:
        return sum(1 for r in self.runs if r.outcome == "win")

    @property
    def losses(self) -> int:
        return sum(1 for r in self.runs if r.outcome == "loss")

    @property
    def ties(self) -> int:
        return sum(1 for r in self.runs if r.outcome == "tie")

    @property
    def fused_row(self) -> ExperimentRow:
        return self.rows[-1]


ENSEMBLE_ROW_NAME = "NMS ensemble"


def _score(preds: Dict[str, List[Detection]], gts: Dict[str, List[GroundTruthBox]], iou_spec: IouSpec,
           class_count: int, interpolated: bool) -> Tuple[float, float]:
    maps = [mean_average_precision([e.ap for e in compute_class_aps(preds, gts, t, class_count, interpolated)])
            for t in iou_spec.thresholds]
    return maps[0], sum(maps) / len(maps)


def run_ensemble_experiment(scene_cfg: SceneConfig,
                            profiles: Sequence[DetectorProfile],
                            fusion_cfg: FusionConfig,
                            eval_spec: IouSpec,
                            runs: int = 1,
                            interpolated: bool = False) -> ExperimentReport:
    """Scores every detector alone and the NMS ensemble of all of them.

    Single detectors pass through the same confidence filter and NMS as the ensemble, so with one
    profile the ensemble row equals the single row. Run r uses scene seed scene_cfg.seed + r.
    """

    if not profiles:
        raise InvalidArgumentError("At least one detector profile is required")
    if len(profiles) < 2:
        logger.warning("Only one detector profile: the ensemble row equals the single-detector row")

    class_count = scene_cfg.class_count
    outcomes = []
    single_sums = np.zeros((len(profiles), 2))
    fused_sum = np.zeros(2)

    for run in range(runs):
        cfg = replace(scene_cfg, seed=scene_cfg.seed + run)
        gts = {image_id_for(i): generate_scene(cfg, i) for i in range(cfg.image_count)}
        raw = [
            {image_id_for(i): simulate_detector(gts[image_id_for(i)], profile, model_id, i, cfg.seed, class_count)
             for i in range(cfg.image_count)}
            for model_id, profile in enumerate(profiles)
        ]

        single_maps = []
        for model_id, dets in enumerate(raw):
            preds = {image_id: ensemble_fuse([image_dets], fusion_cfg) for image_id, image_dets in dets.items()}
            scores = _score(preds, gts, eval_spec, class_count, interpolated)
            single_sums[model_id] += scores
            single_maps.append(scores[0])

        fused = {image_id: ensemble_fuse([dets[image_id] for dets in raw], fusion_cfg) for image_id in gts}
        fused_scores = _score(fused, gts, eval_spec, class_count, interpolated)
        fused_sum += fused_scores

        outcomes.append(RunOutcome(cfg.seed, tuple(single_maps), fused_scores[0]))
        logger.debug(f"Run {run + 1}/{runs} (seed {cfg.seed}): singles {[round(m, 4) for m in single_maps]}, "
                     f"fused {fused_scores[0]:.4f}")

    rows = [ExperimentRow(p.name, float(s[0] / runs), float(s[1] / runs)) for p, s in zip(profiles, single_sums)]
    rows.append(ExperimentRow(f"{ENSEMBLE_ROW_NAME} ({len(profiles)} models)", float(fused_sum[0] / runs), float(fused_sum[1] / runs)))
    return ExperimentReport(tuple(rows), tuple(outcomes), eval_spec.thresholds, scene_cfg.image_count)


def run_experiment_config(cfg: ExperimentConfig) -> ExperimentReport:
    return run_ensemble_experiment(cfg.scene, cfg.detectors, cfg.fusion, cfg.iou_spec, cfg.runs, cfg.interpolated)


def materialize_dataset(cfg: ExperimentConfig, out_dir, threads: int = 1) -> DatasetManifest:
    """Writes a synthetic dataset in the label/manifest formats, plus one prediction
    directory per detector (predictions/<name>/<image_id>.txt).
    """

    out_dir = Path(out_dir)
    label_dir = out_dir / "labels"
    label_dir.mkdir(parents=True, exist_ok=True)
    scene = cfg.scene
    class_count = scene.class_count

    def write_image(index: int) -> ImageRecord:
        image_id = image_id_for(index)
        gts = generate_scene(scene, index)
        label_path = label_dir / f"{image_id}.txt"
        write_label_file(label_path, gts)
        for model_id, profile in enumerate(cfg.detectors):
            dets = simulate_detector(gts, profile, model_id, index, scene.seed, class_count)
            write_prediction_file(out_dir / "predictions" / profile.name / f"{image_id}.txt", dets)
        return ImageRecord(image_id, IMAGE_SIZE, IMAGE_SIZE, image_id, label_path)

    for profile in cfg.detectors:
        (out_dir / "predictions" / profile.name).mkdir(parents=True, exist_ok=True)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        records = tuple(executor.map(write_image, range(scene.image_count)))

    manifest = DatasetManifest(ClassTable(scene.names()), records, out_dir)
    write_manifest(out_dir / "manifest.json", manifest)
    logger.info(f"Wrote {len(records)} images and {len(cfg.detectors)} prediction sets to {out_dir}")
    return manifest


""" Configuration files """

_TOP_KEYS = {"scene", "detectors", "fusion", "evaluation", "runs"}
_SCENE_KEYS = {"image_count", "boxes_per_image", "class_weights", "class_names", "box_size", "overlap_allowance", "seed"}
_DETECTOR_KEYS = {"name", "miss_rate", "jitter_sigma", "false_positive_rate", "class_confusion_rate",
                  "confidence", "fp_box_size", "seed_offset"}
_CONFIDENCE_KEYS = {"base", "penalty", "noise_sigma", "fp_low", "fp_high"}
_FUSION_KEYS = {"iou_threshold", "confidence_threshold", "class_aware"}
_EVALUATION_KEYS = {"iou", "iou_range", "interpolated"}


def _table(raw: Any, allowed: set, key_path: str) -> Dict[str, Any]:
    if not isinstance(raw, dict):
        raise ConfigError("must be a table/object", key_path)
    unknown = sorted(set(raw) - allowed)
    if unknown:
        raise ConfigError("unknown key", f"{key_path}.{unknown[0]}" if key_path else unknown[0])
    return raw


def _number(raw: Any, key_path: str, integer: bool = False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)) or (integer and not isinstance(raw, int)):
        raise ConfigError(f"must be {'an integer' if integer else 'a number'}, got {raw!r}", key_path)
    return raw


def _pair(raw: Any, key_path: str, integer: bool = False) -> tuple:
    if not isinstance(raw, list) or len(raw) != 2:
        raise ConfigError(f"must be a two-element list, got {raw!r}", key_path)
    return tuple(_number(v, f"{key_path}[{i}]", integer) for i, v in enumerate(raw))


def _build(factory, kwargs: Dict[str, Any], key_path: str):
    try:
        return factory(**kwargs)
    except InvalidArgumentError as e:
        raise ConfigError(str(e), key_path) from e


def _parse_scene(raw: Any) -> SceneConfig:
    table = _table(raw, _SCENE_KEYS, "scene")
    kwargs: Dict[str, Any] = {}
    for key in ("image_count", "seed"):
        if key in table:
            kwargs[key] = _number(table[key], f"scene.{key}", integer=True)
    if "overlap_allowance" in table:
        kwargs["overlap_allowance"] = _number(table["overlap_allowance"], "scene.overlap_allowance")
    if "boxes_per_image" in table:
        kwargs["boxes_per_image"] = _pair(table["boxes_per_image"], "scene.boxes_per_image", integer=True)
    if "box_size" in table:
        kwargs["box_size"] = _pair(table["box_size"], "scene.box_size")
    if "class_weights" in table:
        weights = table["class_weights"]
        if not isinstance(weights, list) or not weights:
            raise ConfigError("must be a non-empty list", "scene.class_weights")
        kwargs["class_weights"] = tuple(_number(w, f"scene.class_weights[{i}]") for i, w in enumerate(weights))
    if "class_names" in table:
        names = table["class_names"]
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ConfigError("must be a list of strings", "scene.class_names")
        kwargs["class_names"] = tuple(names)
    return _build(SceneConfig, kwargs, "scene")


def _parse_detector(raw: Any, index: int) -> DetectorProfile:
    key_path = f"detectors[{index}]"
    table = _table(raw, _DETECTOR_KEYS, key_path)
    kwargs: Dict[str, Any] = {"name": f"detector_{index + 1}", "seed_offset": index}
    if "name" in table:
        if not isinstance(table["name"], str) or not table["name"].strip() or "/" in table["name"]:
            raise ConfigError("must be a non-empty name without '/'", f"{key_path}.name")
        kwargs["name"] = table["name"]
    for key in ("miss_rate", "jitter_sigma", "false_positive_rate", "class_confusion_rate"):
        if key in table:
            kwargs[key] = _number(table[key], f"{key_path}.{key}")
    if "seed_offset" in table:
        kwargs["seed_offset"] = _number(table["seed_offset"], f"{key_path}.seed_offset", integer=True)
    if "fp_box_size" in table:
        kwargs["fp_box_size"] = _pair(table["fp_box_size"], f"{key_path}.fp_box_size")
    if "confidence" in table:
        conf = _table(table["confidence"], _CONFIDENCE_KEYS, f"{key_path}.confidence")
        conf_kwargs = {key: _number(value, f"{key_path}.confidence.{key}") for key, value in conf.items()}
        kwargs["confidence"] = _build(ConfidenceModel, conf_kwargs, f"{key_path}.confidence")
    return _build(DetectorProfile, kwargs, key_path)


def _parse_fusion(raw: Any) -> FusionConfig:
    table = _table(raw, _FUSION_KEYS, "fusion")
    kwargs: Dict[str, Any] = {}
    for key in ("iou_threshold", "confidence_threshold"):
        if key in table:
            kwargs[key] = _number(table[key], f"fusion.{key}")
    if "class_aware" in table:
        if not isinstance(table["class_aware"], bool):
            raise ConfigError("must be a boolean", "fusion.class_aware")
        kwargs["class_aware"] = table["class_aware"]
    return _build(FusionConfig, kwargs, "fusion")


def _parse_evaluation(raw: Any) -> Tuple[IouSpec, bool]:
    table = _table(raw, _EVALUATION_KEYS, "evaluation")
    if "iou" in table and "iou_range" in table:
        raise ConfigError("give either iou or iou_range, not both", "evaluation")
    spec = IouSpec.single()
    try:
        if "iou" in table:
            spec = IouSpec.single(_number(table["iou"], "evaluation.iou"))
        elif "iou_range" in table:
            if not isinstance(table["iou_range"], str):
                raise ConfigError("must be a 'lo:hi:step' string", "evaluation.iou_range")
            spec = IouSpec.parse(table["iou_range"])
    except InvalidArgumentError as e:
        raise ConfigError(str(e), "evaluation") from e
    interpolated = table.get("interpolated", False)
    if not isinstance(interpolated, bool):
        raise ConfigError("must be a boolean", "evaluation.interpolated")
    return spec, interpolated


def parse_experiment_config(document: Any) -> ExperimentConfig:
    """Builds an ExperimentConfig from a parsed TOML/JSON document. Missing keys take defaults."""

    table = _table(document, _TOP_KEYS, "")
    scene = _parse_scene(table["scene"]) if "scene" in table else SceneConfig()

    detectors = default_profiles()
    if "detectors" in table:
        raw = table["detectors"]
        if not isinstance(raw, list) or not raw:
            raise ConfigError("must be a non-empty list of tables", "detectors")
        detectors = tuple(_parse_detector(entry, i) for i, entry in enumerate(raw))

    fusion = _parse_fusion(table["fusion"]) if "fusion" in table else FusionConfig()
    iou_spec, interpolated = _parse_evaluation(table["evaluation"]) if "evaluation" in table else (IouSpec.single(), False)
    runs = _number(table.get("runs", 1), "runs", integer=True)
    if runs < 1:
        raise ConfigError(f"must be at least 1, got {runs}", "runs")
    names = [d.name for d in detectors]
    if len(set(names)) != len(names):
        raise ConfigError(f"detector names must be unique, got {names}", "detectors")

    return ExperimentConfig(scene, detectors, fusion, iou_spec, interpolated, runs)


def load_experiment_config(path) -> ExperimentConfig:
    """Reads a TOML (.toml) or JSON config file."""

    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as f:
                document = tomli.load(f)
        else:
            with open(path, "r", encoding="utf-8") as f:
                document = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path} ({e})") from e
    except (tomli.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot parse config {path}: {e}") from e

    try:
        return parse_experiment_config(document)
    except ConfigError:
        raise
    except InputError as e:
        raise ConfigError(str(e)) from e
