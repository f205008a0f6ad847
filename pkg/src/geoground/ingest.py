"""Parse detection annotations (VOC-style XML or JSONL) into typed records.

Malformed objects are never dropped silently: each one becomes a
ValidationIssue, and ``objects_in_files == instances + issues`` always holds.
Pixel data is not touched here; ingestion is metadata only.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from .geometry import BBox, clamp_to_image


class IngestError(Exception):
    """Unreadable or structurally unparseable input; names file and position."""


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    width: int
    height: int
    file_path: str = ""
    spatial_resolution: float | None = None

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image {self.image_id}: dimensions must be positive")


@dataclass(frozen=True)
class ObjectInstance:
    object_id: str
    image_id: str
    category: str
    bbox: BBox


@dataclass(frozen=True)
class ValidationIssue:
    image_id: str
    object_id: str
    kind: str  # inverted_box | out_of_bounds | missing_field | non_numeric | unknown_category
    detail: str


def normalize_category(name: str) -> str:
    """Canonical category surface form: lower-case, single internal spaces."""
    return re.sub(r"\s+", " ", name.strip()).lower()


def _make_instance(image: ImageRecord, object_id: str, category: str,
                   coords: tuple[float, float, float, float],
                   known_categories: frozenset[str] | None,
                   issues: list[ValidationIssue]) -> ObjectInstance | None:
    x1, y1, x2, y2 = coords
    if x1 >= x2 or y1 >= y2:
        issues.append(ValidationIssue(image.image_id, object_id, "inverted_box",
                                      f"coordinates ({x1}, {y1}, {x2}, {y2})"))
        return None
    if min(x1, y1, x2, y2) < -1.0 or x2 > image.width + 1.0 or y2 > image.height + 1.0:
        issues.append(ValidationIssue(image.image_id, object_id, "out_of_bounds",
                                      f"coordinates ({x1}, {y1}, {x2}, {y2}) vs "
                                      f"{image.width}x{image.height}"))
        return None
    try:
        box = clamp_to_image(BBox(max(x1, 0.0), max(y1, 0.0), max(x2, 0.0), max(y2, 0.0)),
                             image.width, image.height)
    except ValueError as exc:
        issues.append(ValidationIssue(image.image_id, object_id, "inverted_box", str(exc)))
        return None
    category = normalize_category(category)
    if known_categories is not None and category not in known_categories:
        issues.append(ValidationIssue(image.image_id, object_id, "unknown_category", category))
        return None
    return ObjectInstance(object_id, image.image_id, category, box)


def _parse_voc_file(path: Path, known_categories: frozenset[str] | None,
                    images: dict[str, ImageRecord],
                    objects: list[ObjectInstance],
                    issues: list[ValidationIssue]) -> None:
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        line, col = exc.position
        raise IngestError(f"{path}: malformed XML at line {line}, column {col}") from exc
    root = tree.getroot()

    image_id = path.stem
    filename_el = root.find("filename")
    file_path = filename_el.text.strip() if filename_el is not None and filename_el.text else (
        image_id + ".jpg")

    size = root.find("size")
    if size is None:
        raise IngestError(f"{path}: missing required <size> element")
    try:
        width = int(float(size.findtext("width", "")))
        height = int(float(size.findtext("height", "")))
    except ValueError as exc:
        raise IngestError(f"{path}: non-numeric <size> dimensions") from exc

    resolution = None
    res_el = root.find("resolution")
    if res_el is not None and res_el.text:
        try:
            resolution = float(res_el.text)
        except ValueError:
            resolution = None

    try:
        image = ImageRecord(image_id, width, height, file_path, resolution)
    except ValueError as exc:
        raise IngestError(f"{path}: {exc}") from exc
    if image_id in images:
        raise IngestError(f"{path}: duplicate image_id {image_id!r}")
    images[image_id] = image

    for index, node in enumerate(root.iter("object")):
        object_id = f"{image_id}:{index:04d}"
        name = node.findtext("name")
        bnd = node.find("bndbox")
        if not name or bnd is None:
            issues.append(ValidationIssue(image_id, object_id, "missing_field",
                                          "object lacks <name> or <bndbox>"))
            continue
        raw = [bnd.findtext(tag) for tag in ("xmin", "ymin", "xmax", "ymax")]
        if any(v is None for v in raw):
            issues.append(ValidationIssue(image_id, object_id, "missing_field",
                                          "bndbox lacks one of xmin/ymin/xmax/ymax"))
            continue
        try:
            coords = tuple(float(v) for v in raw)
        except ValueError:
            issues.append(ValidationIssue(image_id, object_id, "non_numeric",
                                          "bndbox coordinate is not a number"))
            continue
        instance = _make_instance(image, object_id, name, coords, known_categories, issues)
        if instance is not None:
            objects.append(instance)


def _parse_jsonl_file(path: Path, known_categories: frozenset[str] | None,
                      images: dict[str, ImageRecord],
                      objects: list[ObjectInstance],
                      issues: list[ValidationIssue]) -> None:
    counters: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}: invalid JSON at line {lineno}: {exc.msg}") from exc
            try:
                image_id = str(rec["image_id"])
                width = int(rec["width"])
                height = int(rec["height"])
            except (KeyError, TypeError, ValueError) as exc:
                raise IngestError(f"{path}: line {lineno}: missing or bad image fields "
                                  f"({exc})") from exc
            image = images.get(image_id)
            if image is None:
                try:
                    image = ImageRecord(image_id, width, height,
                                        str(rec.get("file_path", "")),
                                        rec.get("spatial_resolution"))
                except ValueError as exc:
                    raise IngestError(f"{path}: line {lineno}: {exc}") from exc
                images[image_id] = image
            elif (image.width, image.height) != (width, height):
                raise IngestError(f"{path}: line {lineno}: image {image_id!r} re-declared "
                                  f"with different dimensions")

            if "category" not in rec and "bbox" not in rec:
                continue  # image-only line (an image with no objects)
            index = counters.get(image_id, 0)
            counters[image_id] = index + 1
            object_id = str(rec.get("object_id") or f"{image_id}:{index:04d}")
            category = rec.get("category")
            bbox = rec.get("bbox")
            if not category or not isinstance(bbox, list) or len(bbox) != 4:
                issues.append(ValidationIssue(image_id, object_id, "missing_field",
                                              "need category and 4-element bbox"))
                continue
            try:
                coords = tuple(float(v) for v in bbox)
            except (TypeError, ValueError):
                issues.append(ValidationIssue(image_id, object_id, "non_numeric",
                                              f"bbox {bbox!r}"))
                continue
            instance = _make_instance(image, object_id, str(category), coords,
                                      known_categories, issues)
            if instance is not None:
                objects.append(instance)


def load_annotations(path: str | Path, format: str,
                     categories: set[str] | None = None,
                     ) -> tuple[list[ImageRecord], list[ObjectInstance], list[ValidationIssue]]:
    """Load a file or directory of annotations.

    ``format`` is ``voc_xml`` (one XML file per image) or ``jsonl`` (one
    object per line). When ``categories`` is given, objects outside it are
    reported as ``unknown_category`` issues. Output ordering is deterministic
    by (image_id, object_id) regardless of directory listing order.
    """
    root = Path(path)
    if not root.exists():
        raise IngestError(f"annotation path does not exist: {root}")
    if format not in ("voc_xml", "jsonl"):
        raise ValueError(f"unknown annotation format {format!r}")

    known = frozenset(normalize_category(c) for c in categories) if categories else None
    suffix = ".xml" if format == "voc_xml" else ".jsonl"
    if root.is_dir():
        files = sorted(p for p in root.rglob(f"*{suffix}") if p.is_file())
        if not files:
            raise IngestError(f"no {suffix} files under {root}")
    else:
        files = [root]

    images: dict[str, ImageRecord] = {}
    objects: list[ObjectInstance] = []
    issues: list[ValidationIssue] = []
    for file in files:
        if format == "voc_xml":
            _parse_voc_file(file, known, images, objects, issues)
        else:
            _parse_jsonl_file(file, known, images, objects, issues)

    image_list = sorted(images.values(), key=lambda im: im.image_id)
    objects.sort(key=lambda o: (o.image_id, o.object_id))
    issues.sort(key=lambda i: (i.image_id, i.object_id))
    return image_list, objects, issues


def save_annotations(images: list[ImageRecord], objects: list[ObjectInstance],
                     path: str | Path) -> None:
    """Write records in the toolkit's JSONL form; re-loading round-trips."""
    by_image: dict[str, list[ObjectInstance]] = {}
    for obj in objects:
        by_image.setdefault(obj.image_id, []).append(obj)
    with open(path, "w", encoding="utf-8") as fh:
        for image in sorted(images, key=lambda im: im.image_id):
            base = {
                "image_id": image.image_id,
                "width": image.width,
                "height": image.height,
            }
            if image.file_path:
                base["file_path"] = image.file_path
            if image.spatial_resolution is not None:
                base["spatial_resolution"] = image.spatial_resolution
            image_objects = sorted(by_image.get(image.image_id, []), key=lambda o: o.object_id)
            if not image_objects:
                fh.write(json.dumps(base) + "\n")
            for obj in image_objects:
                rec = dict(base)
                rec["object_id"] = obj.object_id
                rec["category"] = obj.category
                rec["bbox"] = list(obj.bbox.as_tuple())
                fh.write(json.dumps(rec) + "\n")


def save_issues(issues: list[ValidationIssue], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for issue in issues:
            fh.write(json.dumps({
                "image_id": issue.image_id,
                "object_id": issue.object_id,
                "kind": issue.kind,
                "detail": issue.detail,
            }) + "\n")
