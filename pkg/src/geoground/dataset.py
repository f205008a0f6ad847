"""Assemble image/expression/box samples, split them, and serialize them.

The JSONL form written here is the toolkit's canonical interchange format;
statistics, evaluation, and the review service all consume it. Samples carry
their structured fills so a reloaded dataset supports the same resolver
checks as a freshly built one.
"""

from __future__ import annotations

import json
import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from pathlib import Path

from .attributes import AttributeSet, RelationalFact, RelationKind, Scene
from .expressions import (
    Discarded,
    Expression,
    PhraseFills,
    expression_from_dict,
    expression_to_dict,
    generate_expression,
)
from .geometry import BBox
from .ingest import ImageRecord, ObjectInstance
from .sampling import derive_seed

SPLITS = ("train", "val", "test")
STATUSES = ("pending", "accepted", "edited", "rejected")


@dataclass(frozen=True)
class GroundingSample:
    sample_id: str
    image_id: str
    bbox: BBox
    expression: Expression
    split: str | None = None
    status: str = "pending"

    def __post_init__(self) -> None:
        if self.split is not None and self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}")
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")


def sample_id_for(image_id: str, object_id: str) -> str:
    """Stable sample identifier, so review decisions join across re-runs."""
    return format(derive_seed(image_id, object_id), "016x")


def target_category(expr: Expression) -> str:
    fills = expr.fills
    return fills.category if isinstance(fills, PhraseFills) else fills.subject.category


def build_dataset(scenes: list[Scene], seed: int) -> list[GroundingSample]:
    """One pending sample per object that survives disambiguation."""
    samples: list[GroundingSample] = []
    for scene in sorted(scenes, key=lambda s: s.image.image_id):
        for obj in sorted(scene.objects, key=lambda o: o.object_id):
            expr = generate_expression(
                obj.object_id, scene,
                derive_seed(seed, scene.image.image_id, obj.object_id))
            if isinstance(expr, Discarded):
                continue
            samples.append(GroundingSample(
                sample_id=sample_id_for(scene.image.image_id, obj.object_id),
                image_id=scene.image.image_id,
                bbox=obj.bbox,
                expression=expr,
            ))
    return samples


def split_dataset(samples: list[GroundingSample],
                  fractions: tuple[float, float, float] = (0.4, 0.1, 0.5),
                  seed: int = 0) -> list[GroundingSample]:
    """Assign train/val/test at image granularity.

    Images are shuffled by the seed and filled sequentially until each
    split's expression-count target is met, so no image ever spans two
    splits and identical seeds give identical assignments.
    """
    if len(fractions) != len(SPLITS):
        raise ValueError(f"need {len(SPLITS)} fractions, got {len(fractions)}")
    if any(f <= 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must be positive and sum to 1, got {fractions}")

    by_image: dict[str, list[GroundingSample]] = {}
    for sample in samples:
        by_image.setdefault(sample.image_id, []).append(sample)
    image_ids = sorted(by_image)
    if len(image_ids) < len(SPLITS):
        raise ValueError(f"cannot split {len(image_ids)} images into {len(SPLITS)} sets")

    rng = random.Random(derive_seed(seed, "split"))
    rng.shuffle(image_ids)

    total = len(samples)
    cumulative_targets = []
    acc = 0.0
    for fraction in fractions:
        acc += fraction
        cumulative_targets.append(acc * total)

    assignment: dict[str, str] = {}
    split_idx = 0
    cumulative = 0
    for position, image_id in enumerate(image_ids):
        assignment[image_id] = SPLITS[split_idx]
        cumulative += len(by_image[image_id])
        if split_idx < len(SPLITS) - 1:
            remaining_images = len(image_ids) - position - 1
            remaining_splits = len(SPLITS) - split_idx - 1
            if cumulative >= cumulative_targets[split_idx] or remaining_images <= remaining_splits:
                split_idx += 1

    return [replace(s, split=assignment[s.image_id]) for s in samples]


def sample_to_dict(sample: GroundingSample) -> dict:
    return {
        "sample_id": sample.sample_id,
        "image_id": sample.image_id,
        "bbox": list(sample.bbox.as_tuple()),
        "text": sample.expression.text,
        "split": sample.split,
        "status": sample.status,
        "expression": expression_to_dict(sample.expression),
    }


def sample_from_dict(data: dict) -> GroundingSample:
    return GroundingSample(
        sample_id=data["sample_id"],
        image_id=data["image_id"],
        bbox=BBox(*data["bbox"]),
        expression=expression_from_dict(data["expression"]),
        split=data.get("split"),
        status=data.get("status", "pending"),
    )


def _export_voc_xml(samples: list[GroundingSample], out_dir: Path,
                    images: dict[str, ImageRecord]) -> list[Path]:
    by_image: dict[str, list[GroundingSample]] = {}
    for sample in samples:
        by_image.setdefault(sample.image_id, []).append(sample)
    written = []
    for image_id in sorted(by_image):
        image = images.get(image_id)
        if image is None:
            raise KeyError(f"cannot export {image_id!r} as XML without its ImageRecord")
        root = ET.Element("annotation")
        ET.SubElement(root, "filename").text = image.file_path or f"{image_id}.jpg"
        size = ET.SubElement(root, "size")
        ET.SubElement(size, "width").text = str(image.width)
        ET.SubElement(size, "height").text = str(image.height)
        ET.SubElement(size, "depth").text = "3"
        for sample in sorted(by_image[image_id], key=lambda s: s.sample_id):
            node = ET.SubElement(root, "object")
            ET.SubElement(node, "name").text = target_category(sample.expression)
            bnd = ET.SubElement(node, "bndbox")
            for tag, value in zip(("xmin", "ymin", "xmax", "ymax"),
                                  sample.bbox.as_tuple()):
                ET.SubElement(bnd, tag).text = repr(value)
            ET.SubElement(node, "description").text = sample.expression.text
        tree = ET.ElementTree(root)
        ET.indent(tree)
        path = out_dir / f"{image_id}.xml"
        tree.write(path, encoding="unicode")
        written.append(path)
    return written


def export_dataset(samples: list[GroundingSample], path: str | Path,
                   format: str = "jsonl",
                   images: dict[str, ImageRecord] | None = None) -> list[Path]:
    """Write samples as JSONL (one file) or VOC-style XML (one per image).

    XML export needs the ImageRecord map for the size element. Returns the
    list of files written.
    """
    path = Path(path)
    if format == "jsonl":
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for sample in samples:
                fh.write(json.dumps(sample_to_dict(sample)) + "\n")
        return [path]
    if format == "voc_xml":
        path.mkdir(parents=True, exist_ok=True)
        return _export_voc_xml(samples, path, images or {})
    raise ValueError(f"unknown export format {format!r}")


def load_dataset(path: str | Path) -> list[GroundingSample]:
    samples = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                samples.append(sample_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}: bad sample at line {lineno}: {exc}") from exc
    seen = set()
    for sample in samples:
        if sample.sample_id in seen:
            raise ValueError(f"{path}: duplicate sample_id {sample.sample_id!r}")
        seen.add(sample.sample_id)
    return samples


def scene_to_dict(scene: Scene) -> dict:
    image = scene.image
    return {
        "image": {
            "image_id": image.image_id,
            "width": image.width,
            "height": image.height,
            "file_path": image.file_path,
            "spatial_resolution": image.spatial_resolution,
        },
        "objects": [
            {"object_id": o.object_id, "category": o.category, "bbox": list(o.bbox.as_tuple())}
            for o in scene.objects
        ],
        "attributes": {
            oid: {
                "category": a.category,
                "color": a.color,
                "size_word": a.size_word,
                "geometry": a.geometry,
                "abs_location": a.abs_location,
            }
            for oid, a in sorted(scene.attributes.items())
        },
        "relations": [
            {"subject_id": f.subject_id, "object_id": f.object_id,
             "kind": f.kind.value, "value": f.value}
            for f in scene.relations
        ],
    }


def scene_from_dict(data: dict) -> Scene:
    img = data["image"]
    image = ImageRecord(img["image_id"], img["width"], img["height"],
                        img.get("file_path", ""), img.get("spatial_resolution"))
    objects = [
        ObjectInstance(o["object_id"], image.image_id, o["category"], BBox(*o["bbox"]))
        for o in data["objects"]
    ]
    attributes = {
        oid: AttributeSet(a["category"], a.get("color"), a.get("size_word"),
                          a.get("geometry"), a.get("abs_location"))
        for oid, a in data["attributes"].items()
    }
    relations = [
        RelationalFact(f["subject_id"], f["object_id"], RelationKind(f["kind"]), f["value"])
        for f in data["relations"]
    ]
    return Scene(image, objects, attributes, relations)


def save_scenes(scenes: list[Scene], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for scene in sorted(scenes, key=lambda s: s.image.image_id):
            fh.write(json.dumps(scene_to_dict(scene)) + "\n")


def load_scenes(path: str | Path) -> list[Scene]:
    scenes = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                scenes.append(scene_from_dict(json.loads(line)))
    return scenes
