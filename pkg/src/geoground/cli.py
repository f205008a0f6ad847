"""Command-line entry point orchestrating the pipeline.

Every subcommand prints a final machine-readable JSON summary line. Exit
codes: 0 success, 1 validation failure, 2 usage error. All randomness flows
from --seed; nothing is seeded implicitly.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import dataset as ds
from . import evaluation as ev
from . import stats as st
from .attributes import build_scene
from .config import AttributeConfig, load_config
from .ingest import IngestError, load_annotations, save_annotations, save_issues
from .review import ReviewService
from .sampling import DropReason, SamplingConfig, sample_boxes

CONFIG_ENV = "REFEXP_CONFIG"


def _summary(**fields) -> None:
    click.echo(json.dumps(fields, sort_keys=True))


def _attribute_config(config_path: str | None) -> AttributeConfig:
    path = config_path or os.environ.get(CONFIG_ENV)
    if path:
        return load_config(path)
    return AttributeConfig()


def _load_raster(images_dir: str | None, file_path: str) -> np.ndarray | None:
    if not images_dir or not file_path:
        return None
    candidate = Path(file_path)
    if not candidate.is_absolute():
        candidate = Path(images_dir) / candidate
    if not candidate.is_file():
        return None
    from PIL import Image

    with Image.open(candidate) as img:
        return np.asarray(img.convert("RGB"))


@click.group()
def main() -> None:
    """Referring-expression grounding dataset toolkit."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["voc_xml", "jsonl"]), default="voc_xml",
              show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def ingest(input_path: str, fmt: str, out: str) -> None:
    """Parse annotations into the canonical JSONL form plus an issue report."""
    try:
        images, objects, issues = load_annotations(input_path, fmt)
    except IngestError as exc:
        raise click.ClickException(str(exc))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_annotations(images, objects, out_dir / "annotations.jsonl")
    save_issues(issues, out_dir / "issues.jsonl")
    _summary(command="ingest", images=len(images), objects=len(objects),
             issues=len(issues), out=str(out_dir))


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["voc_xml", "jsonl"]), default="voc_xml",
              show_default=True)
@click.option("--images", "images_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="Image files for pixel-based attributes.")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", required=True, type=int)
@click.option("--min-area-ratio", default=0.0002, show_default=True, type=float)
@click.option("--max-area-ratio", default=0.99, show_default=True, type=float)
@click.option("--cap", default=5, show_default=True, type=int,
              help="Max objects of one category kept per image.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help=f"Threshold-table config file (or set ${CONFIG_ENV}).")
def generate(input_path: str, fmt: str, images_dir: str | None, out: str, seed: int,
             min_area_ratio: float, max_area_ratio: float, cap: int,
             config_path: str | None) -> None:
    """Run box sampling, attribute extraction, and expression generation."""
    try:
        attr_cfg = _attribute_config(config_path)
        images, objects, issues = load_annotations(input_path, fmt)
        sampling_cfg = SamplingConfig(min_area_ratio=min_area_ratio,
                                      max_area_ratio=max_area_ratio,
                                      max_per_category=cap, seed=seed)
        image_map = {im.image_id: im for im in images}
        kept, dropped = sample_boxes(objects, image_map, sampling_cfg)
    except (IngestError, ValueError, KeyError) as exc:
        raise click.ClickException(str(exc))

    by_image: dict[str, list] = {}
    for obj in kept:
        by_image.setdefault(obj.image_id, []).append(obj)
    scenes = []
    for image_id in sorted(by_image):
        image = image_map[image_id]
        raster = _load_raster(images_dir, image.file_path)
        scenes.append(build_scene(image, by_image[image_id], raster, attr_cfg))

    samples = ds.build_dataset(scenes, seed)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ds.export_dataset(samples, out_dir / "dataset.jsonl")
    ds.save_scenes(scenes, out_dir / "scenes.jsonl")
    save_issues(issues, out_dir / "issues.jsonl")
    with open(out_dir / "drops.jsonl", "w", encoding="utf-8") as fh:
        for obj, reason in dropped:
            fh.write(json.dumps({"image_id": obj.image_id, "object_id": obj.object_id,
                                 "reason": reason.value}) + "\n")
    discarded = sum(len(v) for v in by_image.values()) - len(samples)
    _summary(command="generate", seed=seed, images=len(scenes), kept_objects=len(kept),
             dropped_objects=len(dropped), discarded_objects=discarded,
             samples=len(samples), out=str(out_dir))


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default=None, type=click.Path(dir_okay=False),
              help="Output JSONL; defaults to rewriting the input.")
@click.option("--seed", required=True, type=int)
@click.option("--fractions", default="0.4,0.1,0.5", show_default=True,
              help="train,val,test expression fractions.")
def split(input_path: str, out: str | None, seed: int, fractions: str) -> None:
    """Assign train/val/test splits at image granularity."""
    try:
        parts = tuple(float(x) for x in fractions.split(","))
        samples = ds.load_dataset(input_path)
        assigned = ds.split_dataset(samples, parts, seed)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    target = Path(out) if out else Path(input_path)
    ds.export_dataset(assigned, target)
    counts = {name: sum(1 for s in assigned if s.split == name) for name in ds.SPLITS}
    _summary(command="split", seed=seed, fractions=list(parts), out=str(target), **counts)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scenes", "scenes_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
def stats(input_path: str, scenes_path: str, out: str) -> None:
    """Compute dataset statistics (JSON document plus per-panel CSVs)."""
    try:
        samples = ds.load_dataset(input_path)
        scenes = ds.load_scenes(scenes_path)
        report = st.compute_statistics(samples, scenes)
    except (ValueError, KeyError) as exc:
        raise click.ClickException(str(exc))
    st.save_report(report, out)
    _summary(command="stats", pairs=report.pair_count, images=report.image_count,
             vocabulary=report.vocabulary_size, mean_length=report.length_mean,
             out=str(out))


@main.command()
@click.option("--input", "preds_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Predictions JSONL: {sample_id, bbox, score?}.")
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--thresholds", default="0.5,0.6,0.7,0.8,0.9", show_default=True)
def evaluate(preds_path: str, truth_path: str, out: str, thresholds: str) -> None:
    """Score predictions with precision@IoU, mean IoU, and cumulative IoU."""
    try:
        taus = tuple(float(x) for x in thresholds.split(","))
        preds = ev.load_predictions(preds_path)
        truth = ds.load_dataset(truth_path)
        report = ev.evaluate_predictions(preds, truth, taus)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    ev.save_report(report, out)
    _summary(command="evaluate", samples=report.sample_count,
             mean_iou=report.mean_iou, cum_iou=report.cum_iou,
             precision_at={f"{t:g}": p for t, p in report.precision_at.items()},
             out=str(out))


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--annotations", "annotations_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Canonical annotations JSONL, for image sizes and file paths.")
@click.option("--images", "images_dir", default=None,
              type=click.Path(exists=True, file_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False))
@click.option("--port", default=8765, show_default=True, type=int)
@click.option("--lease-ttl", default=300.0, show_default=True, type=float)
def serve(input_path: str, annotations_path: str | None, images_dir: str | None,
          log_path: str, port: int, lease_ttl: float) -> None:
    """Run the review service HTTP API."""
    import uvicorn

    from .server import create_app

    try:
        samples = ds.load_dataset(input_path)
        images = {}
        if annotations_path:
            recs, _, _ = load_annotations(annotations_path, "jsonl")
            images = {im.image_id: im for im in recs}
        service = ReviewService.from_log(samples, log_path, images=images,
                                         lease_ttl=lease_ttl)
    except (IngestError, ValueError) as exc:
        raise click.ClickException(str(exc))
    _summary(command="serve", samples=len(samples), port=port, log=log_path)
    uvicorn.run(create_app(service, images_dir), host="127.0.0.1", port=port)


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--log", "log_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--format", "fmt", type=click.Choice(["jsonl", "voc_xml"]), default="jsonl",
              show_default=True)
@click.option("--annotations", "annotations_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
def export(input_path: str, log_path: str, out: str, fmt: str,
           annotations_path: str | None) -> None:
    """Export the verified dataset (accepted and edited samples only)."""
    try:
        samples = ds.load_dataset(input_path)
        images = {}
        if annotations_path:
            recs, _, _ = load_annotations(annotations_path, "jsonl")
            images = {im.image_id: im for im in recs}
        service = ReviewService.from_log(samples, log_path, images=images)
        written = service.export_verified(out, format=fmt)
    except (IngestError, ValueError, KeyError) as exc:
        raise click.ClickException(str(exc))
    _summary(command="export", files=[str(p) for p in written],
             **service.progress())


if __name__ == "__main__":
    main()
