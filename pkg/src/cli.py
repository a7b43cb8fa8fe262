"""File containing the CLI for the project.

Written with Typer. Documentation: https://typer.tiangolo.com

Usage:
    py src/cli.py COMMAND [OPTIONS] ...

Help:
    py src/cli.py --help
    py src/cli.py COMMAND --help

Exit codes: 0 success, 2 input or configuration error, 1 internal failure.
Reports go to standard output, diagnostics to standard error.
"""

# Stdlib imports
import os
import sys
from contextlib import contextmanager
from dataclasses import replace
from enum import Enum
from pathlib import Path
from typing import List, Optional

# Third-party modules
import typer
from rich.console import Console
from typing_extensions import Annotated

# Extend module paths
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Custom modules
from src.customErrors import InvalidArgumentError, ToolkitError
from src.dataset import DEFAULT_AUDIT_IOU, audit_labels, class_stats, fold_summary
from src.detio import load_manifest
from src.evaluation import DEFAULT_EVAL_IOU, IouSpec
from src.logger import logger, set_verbosity, stderr_console
from src.nms import DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_IOU_THRESHOLD, FusionConfig
from src.pipeline import (
    THREADS_ENV,
    compare_directories,
    evaluate_directory,
    fuse_directories,
    resolve_threads,
    split_manifest,
)
from src.reports import (
    anomalies_to_json,
    class_stats_to_csv,
    comparison_to_json,
    eval_report_to_json,
    experiment_to_json,
    render_anomalies,
    render_class_stats,
    render_comparison,
    render_eval_report,
    render_experiment,
    render_folds,
    write_curves_csv,
)
from src.simulate import ExperimentConfig, load_experiment_config, materialize_dataset, run_experiment_config

# Typer CLI instance
app = typer.Typer(help="NMS ensembling and detection evaluation toolkit.", add_completion=False)


class OutputFormat(str, Enum):
    text = "text"
    json = "json"


@contextmanager
def handle_errors():
    """Maps toolkit errors to exit code 2 and anything unexpected to exit code 1."""

    try:
        yield
    except typer.Exit:
        raise
    except ToolkitError as e:
        logger.error(str(e))
        raise typer.Exit(code=2)
    except Exception as e:
        logger.exception(f"Internal failure: {e}")
        raise typer.Exit(code=1)


def log_config(command: str, **values) -> None:
    """Prints the resolved configuration of a run to standard error, whatever the verbosity."""

    settings = ", ".join(f"{key}={value}" for key, value in values.items())
    stderr_console.print(f"{command}: {settings}", markup=False, highlight=False, soft_wrap=True)


def stdout_console() -> Console:
    return Console(highlight=False)


def parse_iou_spec(iou: Optional[float], iou_range: Optional[str]) -> IouSpec:
    if iou is not None and iou_range is not None:
        raise InvalidArgumentError("Give either --iou or --iou-range, not both")
    if iou_range is not None:
        return IouSpec.parse(iou_range)
    return IouSpec.single(DEFAULT_EVAL_IOU if iou is None else iou)


def parse_pairs(values: List[str], option: str) -> List[tuple]:
    pairs = []
    for value in values:
        name, sep, rest = value.partition("=")
        if not sep or not name or not rest:
            raise InvalidArgumentError(f"{option} expects NAME=VALUE, got '{value}'")
        pairs.append((name, rest))
    return pairs


@app.callback()
def main(verbose: Annotated[int, typer.Option("--verbose", "-v", count=True, help="More diagnostics")] = 0,
         quiet: Annotated[bool, typer.Option("--quiet", "-q", help="Only warnings and errors")] = False):
    set_verbosity(verbose, quiet)


@app.command()
def stats(manifest_path: Annotated[Path, typer.Argument(help="Dataset manifest (JSON)")],
          csv_path: Annotated[Optional[Path], typer.Option("--csv", help="Also write the counts as CSV")] = None):
    """Label count per class."""

    log_config("stats", manifest=manifest_path, csv=csv_path)
    with handle_errors():
        class_counts = class_stats(load_manifest(manifest_path))
        stdout_console().print(render_class_stats(class_counts))
        if csv_path is not None:
            csv_path.write_text(class_stats_to_csv(class_counts), encoding="utf-8")


@app.command()
def split(manifest_path: Annotated[Path, typer.Argument(help="Dataset manifest (JSON)")],
          out: Annotated[Path, typer.Option("--out", help="Directory for the fold lists")],
          folds: Annotated[int, typer.Option("--folds", "-k", help="Number of folds")] = 4,
          seed: Annotated[int, typer.Option("--seed", help="Shuffle seed")] = 0,
          only_tag: Annotated[Optional[str], typer.Option("--only-tag", help="Only split images with this tag")] = None):
    """Grouped k-fold split; writes fold<i>_train.txt and fold<i>_val.txt."""

    log_config("split", manifest=manifest_path, folds=folds, seed=seed, out=out, only_tag=only_tag)
    with handle_errors():
        fold_specs = split_manifest(manifest_path, folds, seed, out, only_tag)
        stdout_console().print(render_folds(fold_summary(fold_specs)))


@app.command()
def fuse(inputs: Annotated[List[Path], typer.Option("--inputs", help="Prediction directory of one model; repeat per model")],
         out: Annotated[Path, typer.Option("--out", help="Directory for fused predictions")],
         iou: Annotated[float, typer.Option("--iou", help="NMS IoU threshold")] = DEFAULT_IOU_THRESHOLD,
         conf: Annotated[float, typer.Option("--conf", help="Confidence threshold")] = DEFAULT_CONFIDENCE_THRESHOLD,
         class_agnostic: Annotated[bool, typer.Option("--class-agnostic", help="Suppress across classes")] = False,
         threads: Annotated[Optional[int], typer.Option("--threads", envvar=THREADS_ENV, help="Worker threads")] = None):
    """NMS-ensemble the predictions of several models, image by image."""

    with handle_errors():
        workers = resolve_threads(threads)
        cfg = FusionConfig(iou_threshold=iou, confidence_threshold=conf, class_aware=not class_agnostic)
        log_config("fuse", inputs=[str(p) for p in inputs], out=out, iou=cfg.iou_threshold,
                   conf=cfg.confidence_threshold, class_aware=cfg.class_aware, threads=workers)
        counts = fuse_directories(inputs, out, cfg, workers)
        typer.echo(f"{len(counts)} image(s), {sum(counts.values())} fused detection(s) written to {out}")


@app.command("eval")
def evaluate(pred: Annotated[Path, typer.Option("--pred", help="Prediction directory")],
             gt: Annotated[Path, typer.Option("--gt", help="Ground-truth manifest")],
             iou: Annotated[Optional[float], typer.Option("--iou", help="Matching IoU threshold [default: 0.5]")] = None,
             iou_range: Annotated[Optional[str], typer.Option("--iou-range", help="lo:hi:step, e.g. 0.5:0.95:0.05")] = None,
             output_format: Annotated[OutputFormat, typer.Option("--format", help="Report format")] = OutputFormat.text,
             curves: Annotated[Optional[Path], typer.Option("--curves", help="Directory for per-class PR-curve CSVs")] = None,
             conf: Annotated[float, typer.Option("--conf", help="Ignore predictions below this confidence")] = 0.0,
             interpolated: Annotated[bool, typer.Option("--interpolated", help="101-point interpolated AP")] = False,
             name: Annotated[Optional[str], typer.Option("--name", help="Model name in the report")] = None,
             inference_time: Annotated[Optional[float], typer.Option("--inference-time", help="Seconds per image, reported as given")] = None):
    """Score predictions with AP per class and mAP."""

    with handle_errors():
        iou_spec = parse_iou_spec(iou, iou_range)
        log_config("eval", pred=pred, gt=gt, iou=list(iou_spec.thresholds), conf=conf,
                   interpolated=interpolated, format=output_format.value, curves=curves)
        report = evaluate_directory(pred, gt, iou_spec, conf, interpolated, name or "", inference_time)
        if output_format is OutputFormat.json:
            typer.echo(eval_report_to_json(report))
        else:
            stdout_console().print(render_eval_report(report))
        if curves is not None:
            written = write_curves_csv(report, curves)
            logger.info(f"Wrote {len(written)} PR curve(s) to {curves}")


@app.command()
def compare(gt: Annotated[Path, typer.Option("--gt", help="Ground-truth manifest")],
            pred: Annotated[List[str], typer.Option("--pred", help="NAME=DIR; repeat per model")],
            time: Annotated[Optional[List[str]], typer.Option("--time", help="NAME=SECONDS inference time; repeatable")] = None,
            iou: Annotated[Optional[float], typer.Option("--iou", help="Matching IoU threshold [default: 0.5]")] = None,
            iou_range: Annotated[Optional[str], typer.Option("--iou-range", help="lo:hi:step")] = None,
            conf: Annotated[float, typer.Option("--conf", help="Ignore predictions below this confidence")] = 0.0,
            output_format: Annotated[OutputFormat, typer.Option("--format", help="Report format")] = OutputFormat.text):
    """Compare several models on one dataset (model name, mAP, inference time)."""

    with handle_errors():
        iou_spec = parse_iou_spec(iou, iou_range)
        named_dirs = parse_pairs(pred, "--pred")
        times = {}
        for model, seconds in parse_pairs(time or [], "--time"):
            try:
                times[model] = float(seconds)
            except ValueError:
                raise InvalidArgumentError(f"--time expects seconds, got '{seconds}'") from None
        log_config("compare", gt=gt, models=[n for n, _ in named_dirs], iou=list(iou_spec.thresholds), conf=conf)
        reports = compare_directories(named_dirs, gt, iou_spec, conf, times)
        if output_format is OutputFormat.json:
            typer.echo(comparison_to_json(reports))
        else:
            stdout_console().print(render_comparison(reports))


@app.command()
def simulate(out: Annotated[Path, typer.Option("--out", help="Directory for the synthetic dataset")],
             config: Annotated[Optional[Path], typer.Option("--config", help="Experiment config (TOML or JSON)")] = None,
             threads: Annotated[Optional[int], typer.Option("--threads", envvar=THREADS_ENV, help="Worker threads")] = None):
    """Write a synthetic dataset plus one prediction directory per detector."""

    with handle_errors():
        workers = resolve_threads(threads)
        cfg = load_experiment_config(config) if config is not None else ExperimentConfig()
        log_config("simulate", config=config or "defaults", out=out, images=cfg.scene.image_count,
                   seed=cfg.scene.seed, detectors=[d.name for d in cfg.detectors], threads=workers)
        manifest = materialize_dataset(cfg, out, workers)
        typer.echo(f"{len(manifest)} image(s) written to {out}")


@app.command()
def experiment(config: Annotated[Optional[Path], typer.Option("--config", help="Experiment config (TOML or JSON)")] = None,
               runs: Annotated[Optional[int], typer.Option("--runs", help="Override the number of seeded runs")] = None,
               output_format: Annotated[OutputFormat, typer.Option("--format", help="Report format")] = OutputFormat.text):
    """Score each synthetic detector alone and their NMS ensemble."""

    with handle_errors():
        cfg = load_experiment_config(config) if config is not None else ExperimentConfig()
        if runs is not None:
            cfg = replace(cfg, runs=runs)
        log_config("experiment", config=config or "defaults", images=cfg.scene.image_count, seed=cfg.scene.seed,
                   runs=cfg.runs, detectors=[d.name for d in cfg.detectors], fusion=cfg.fusion,
                   iou=list(cfg.iou_spec.thresholds))
        report = run_experiment_config(cfg)
        if output_format is OutputFormat.json:
            typer.echo(experiment_to_json(report))
        else:
            stdout_console().print(render_experiment(report))


@app.command()
def audit(gt: Annotated[Path, typer.Option("--gt", help="Ground-truth manifest")],
          iou: Annotated[float, typer.Option("--iou", help="Overlap above which two boxes are flagged")] = DEFAULT_AUDIT_IOU,
          output_format: Annotated[OutputFormat, typer.Option("--format", help="Report format")] = OutputFormat.text):
    """Flag double labels, conflicting labels and degenerate boxes."""

    log_config("audit", gt=gt, iou=iou)
    with handle_errors():
        anomalies = audit_labels(load_manifest(gt), iou)
        if output_format is OutputFormat.json:
            typer.echo(anomalies_to_json(anomalies))
        else:
            stdout_console().print(render_anomalies(anomalies))


if __name__ == "__main__":
    # Run the CLI application
    app()
