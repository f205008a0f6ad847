"""Object attributes: color, size word, shape, absolute and relative facts.

Per-object attributes come from the pixel crop (color via HSV binning, shape
via contour analysis) and from the box itself (size band, 3x3 location grid).
Pairwise facts compare centers (direction sectors) and areas (size ratios).
Everything is deterministic: the same pixels and boxes always yield the same
attributes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import cv2
import numpy as np

from .config import (
    BLACK_BIN,
    COLOR_WORDS,
    GRAY_BIN,
    LOCATION_WORDS,
    WHITE_BIN,
    AttributeConfig,
)
from .geometry import BBox, area_ratio, iou
from .ingest import ImageRecord, ObjectInstance
from .kernels import classify_colors


class RelationKind(enum.Enum):
    REL_LOCATION = "rel_location"
    REL_SIZE = "rel_size"


@dataclass(frozen=True)
class AttributeSet:
    """Own attributes of one object; only the category is mandatory."""

    category: str
    color: str | None = None
    size_word: str | None = None
    geometry: str | None = None
    abs_location: str | None = None

    def present(self) -> dict[str, str]:
        """Non-empty optional attributes keyed by slot name."""
        slots = {}
        for slot in ("color", "size_word", "geometry", "abs_location"):
            value = getattr(self, slot)
            if value is not None:
                slots[slot] = value
        return slots


@dataclass(frozen=True)
class RelationalFact:
    subject_id: str
    object_id: str
    kind: RelationKind
    value: str

    def __post_init__(self) -> None:
        if self.subject_id == self.object_id:
            raise ValueError("self-relations are not allowed")


@dataclass
class Scene:
    """One image with its kept objects, their attributes, and pairwise facts."""

    image: ImageRecord
    objects: list[ObjectInstance]
    attributes: dict[str, AttributeSet] = field(default_factory=dict)
    relations: list[RelationalFact] = field(default_factory=list)

    def __post_init__(self) -> None:
        ids = {o.object_id for o in self.objects}
        for fact in self.relations:
            if fact.subject_id not in ids or fact.object_id not in ids:
                raise ValueError(f"relation endpoint missing from scene: {fact}")

    def object_by_id(self, object_id: str) -> ObjectInstance:
        for obj in self.objects:
            if obj.object_id == object_id:
                return obj
        raise KeyError(object_id)


def _crop(raster: np.ndarray, box: BBox) -> np.ndarray:
    h, w = raster.shape[:2]
    x0 = max(0, int(math.floor(box.x_min)))
    y0 = max(0, int(math.floor(box.y_min)))
    x1 = min(w, int(math.ceil(box.x_max)))
    y1 = min(h, int(math.ceil(box.y_max)))
    crop = raster[y0:y1, x0:x1]
    if crop.size == 0:
        raise ValueError(f"box {box.as_tuple()} crops to zero pixels on a {w}x{h} raster")
    return crop


def classify_crop_colors(raster: np.ndarray, box: BBox,
                         cfg: AttributeConfig) -> np.ndarray:
    """Per-pixel color-bin codes (indices into COLOR_WORDS) for a box crop."""
    crop = _crop(raster, box)
    hue_lo, hue_hi, hue_bin = cfg.hue_tables()
    return classify_colors(crop, hue_lo, hue_hi, hue_bin,
                           cfg.value_black, cfg.saturation_neutral, cfg.value_white,
                           BLACK_BIN, GRAY_BIN, WHITE_BIN)


def extract_color(raster: np.ndarray, box: BBox, cfg: AttributeConfig) -> str | None:
    """Modal color word of the crop, or None when no color clearly dominates.

    A single word is returned only when its pixel share reaches the
    configured threshold; mixed crops (busy backgrounds) stay colorless.
    """
    labels = classify_crop_colors(raster, box, cfg)
    counts = np.bincount(labels.ravel(), minlength=len(COLOR_WORDS))
    share = counts.max() / labels.size
    if share >= cfg.color_share_threshold:
        return COLOR_WORDS[int(counts.argmax())]
    return None


def extract_size_word(ratio: float, cfg: AttributeConfig) -> str | None:
    """Size word for a box-to-image area ratio; mid-range objects get none.

    Bands are half-open [lo, hi) except the top band, which includes its
    upper edge so the largest keepable boxes still read as huge.
    """
    if not 0.0 <= ratio <= 1.0:
        raise ValueError(f"area ratio must be in [0, 1], got {ratio}")
    top = max(hi for _, hi, _ in cfg.size_bands)
    for lo, hi, word in cfg.size_bands:
        if lo <= ratio < hi or (hi == top and ratio == hi):
            return word
    return None


def extract_geometry(category: str, raster: np.ndarray | None, box: BBox,
                     cfg: AttributeConfig) -> str | None:
    """Shape word via the fixed-shape table, aspect ratio, or contour analysis.

    Order: (1) fixed per-category shapes; (2) aspect ratio beyond the slender
    threshold; (3) largest contour of the thresholded grayscale crop, scored
    by circularity 4*pi*A/P^2 and, failing that, a 4-vertex polygon fit.
    Returns None when no rule fires or no pixels are available.
    """
    fixed = cfg.fixed_shapes.get(category)
    if fixed is not None:
        return fixed
    aspect = max(box.width, box.height) / min(box.width, box.height)
    if aspect > cfg.slender_aspect:
        return "slender"
    if raster is None:
        return None

    crop = _crop(raster, box)
    if crop.ndim == 3:
        gray = cv2.cvtColor(crop, cv2.COLOR_RGB2GRAY)
    else:
        gray = crop
    _, binary = cv2.threshold(gray, 0, 255, cv2.THRESH_BINARY + cv2.THRESH_OTSU)
    contours, _ = cv2.findContours(binary, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
    if not contours:
        return None
    contour = max(contours, key=cv2.contourArea)
    area = cv2.contourArea(contour)
    perimeter = cv2.arcLength(contour, True)
    if area <= 0.0 or perimeter <= 0.0:
        return None
    circularity = 4.0 * math.pi * area / (perimeter * perimeter)
    if circularity >= cfg.circularity_round:
        return "round"
    approx = cv2.approxPolyDP(contour, cfg.poly_epsilon * perimeter, True)
    if len(approx) == 4:
        return "square" if aspect <= cfg.square_aspect else "rectangular"
    return None


def extract_abs_location(box: BBox, image_w: float, image_h: float) -> str:
    """Location word from the box center on a 3x3 equal grid."""
    cx, cy = box.center
    col = min(int(cx * 3.0 / image_w), 2)
    row = min(int(cy * 3.0 / image_h), 2)
    return LOCATION_WORDS[row * 3 + col]


# Half-angle of the flat sectors around the four axis directions; directions
# between sectors read as diagonals. tan(22.5 deg) exactly, so that swapping
# the pair negates the offsets and always yields the mirror word.
_TAN_HALF_SECTOR = math.sqrt(2.0) - 1.0


def extract_rel_location(subject: ObjectInstance, other: ObjectInstance,
                         cfg: AttributeConfig) -> RelationalFact | None:
    """Direction of the subject relative to the other object, if meaningful.

    Heavily overlapping boxes (IoU above the gate) and coincident centers
    yield no fact. The center offset is mapped onto eight 45-degree sectors
    centered on the axis and diagonal directions, in screen coordinates.
    """
    if subject.image_id != other.image_id:
        raise ValueError("relative location needs two objects from one image")
    if subject.object_id == other.object_id:
        return None
    if iou(subject.bbox, other.bbox) > cfg.rel_overlap_gate:
        return None
    scx, scy = subject.bbox.center
    ocx, ocy = other.bbox.center
    dx = scx - ocx
    dy = scy - ocy
    if dx == 0.0 and dy == 0.0:
        return None
    ax, ay = abs(dx), abs(dy)
    if ay <= _TAN_HALF_SECTOR * ax:
        word = "left of" if dx < 0.0 else "right of"
    elif ax <= _TAN_HALF_SECTOR * ay:
        word = "above" if dy < 0.0 else "below"
    elif dy < 0.0:
        word = "upper left of" if dx < 0.0 else "upper right of"
    else:
        word = "lower left of" if dx < 0.0 else "lower right of"
    return RelationalFact(subject.object_id, other.object_id, RelationKind.REL_LOCATION, word)


def extract_rel_size(subject: ObjectInstance, other: ObjectInstance,
                     image: ImageRecord, cfg: AttributeConfig) -> RelationalFact | None:
    """Size comparison of two boxes in one image, if clearly lopsided.

    Compares the boxes' image-area ratios, which reduces to comparing raw
    areas; products instead of quotients keep the comparison exactly
    antisymmetric under swapping.
    """
    if subject.image_id != other.image_id or subject.image_id != image.image_id:
        raise ValueError("relative size needs two objects from the given image")
    if subject.object_id == other.object_id:
        return None
    area_s = subject.bbox.area
    area_o = other.bbox.area
    if area_s <= cfg.rel_smaller_ratio * area_o:
        value = "smaller than"
    elif area_s >= cfg.rel_larger_ratio * area_o:
        value = "larger than"
    else:
        return None
    return RelationalFact(subject.object_id, other.object_id, RelationKind.REL_SIZE, value)


def extract_attributes(obj: ObjectInstance, image: ImageRecord,
                       raster: np.ndarray | None, cfg: AttributeConfig) -> AttributeSet:
    """All own attributes of one object; pixel-based slots need a raster."""
    color = extract_color(raster, obj.bbox, cfg) if raster is not None else None
    size_word = extract_size_word(area_ratio(obj.bbox, image.width, image.height), cfg)
    geometry = extract_geometry(obj.category, raster, obj.bbox, cfg)
    abs_location = extract_abs_location(obj.bbox, image.width, image.height)
    return AttributeSet(obj.category, color, size_word, geometry, abs_location)


def build_scene(image: ImageRecord, objects: list[ObjectInstance],
                raster: np.ndarray | None = None,
                cfg: AttributeConfig | None = None) -> Scene:
    """Assemble a Scene: per-object attributes plus all pairwise facts."""
    cfg = cfg or AttributeConfig()
    ordered = sorted(objects, key=lambda o: o.object_id)
    for obj in ordered:
        if obj.image_id != image.image_id:
            raise ValueError(f"object {obj.object_id} belongs to image {obj.image_id!r}, "
                             f"not {image.image_id!r}")
    attributes = {o.object_id: extract_attributes(o, image, raster, cfg) for o in ordered}
    relations: list[RelationalFact] = []
    for subject in ordered:
        for other in ordered:
            if subject.object_id == other.object_id:
                continue
            loc = extract_rel_location(subject, other, cfg)
            if loc is not None:
                relations.append(loc)
            size = extract_rel_size(subject, other, image, cfg)
            if size is not None:
                relations.append(size)
    return Scene(image, ordered, attributes, relations)
