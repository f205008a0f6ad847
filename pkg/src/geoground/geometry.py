"""Axis-aligned bounding-box geometry: areas, overlap, IoU, GIoU, ratios.

All functions are pure and operate on immutable :class:`BBox` values, so they
are safe to call from any number of concurrent callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class BBox:
    """Axis-aligned box in pixel coordinates, origin top-left, y down.

    Coordinates are stored as floats; integer inputs convert losslessly.
    Degenerate boxes (zero width or height, inverted corners) are rejected
    at construction, as are negative or non-finite coordinates.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        for name in ("x_min", "y_min", "x_max", "y_max"):
            object.__setattr__(self, name, float(getattr(self, name)))
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"box coordinates must be finite, got {coords}")
        if any(c < 0.0 for c in coords):
            raise ValueError(f"box coordinates must be >= 0, got {coords}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(f"degenerate box (need x_min < x_max and y_min < y_max), got {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


def intersection_area(a: BBox, b: BBox) -> float:
    """Overlap area of two boxes; 0 for disjoint or edge-touching boxes."""
    w = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    h = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def union_area(a: BBox, b: BBox) -> float:
    return a.area + b.area - intersection_area(a, b)


def enclosing_area(a: BBox, b: BBox) -> float:
    """Area of the smallest axis-aligned box containing both inputs."""
    w = max(a.x_max, b.x_max) - min(a.x_min, b.x_min)
    h = max(a.y_max, b.y_max) - min(a.y_min, b.y_min)
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union in [0, 1]; 1 iff the boxes coincide."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + b.area - inter)


def giou(a: BBox, b: BBox) -> float:
    """Generalized IoU in (-1, 1]: IoU minus the enclosing-box slack.

    giou(a, b) = iou(a, b) - (area(enclosing) - area(union)) / area(enclosing).
    Equals iou exactly when the union fills its enclosing extent (e.g. for
    identical boxes); unaffected by translating or scaling both boxes.
    """
    union = union_area(a, b)
    enclosing = enclosing_area(a, b)
    return iou(a, b) - (enclosing - union) / enclosing


def area_ratio(box: BBox, image_w: float, image_h: float) -> float:
    """Box area as a fraction of the image area."""
    if image_w <= 0 or image_h <= 0:
        raise ValueError(f"image dimensions must be positive, got {image_w}x{image_h}")
    return box.area / (float(image_w) * float(image_h))


def clamp_to_image(box: BBox, image_w: float, image_h: float, tolerance: float = 1.0) -> BBox:
    """Clamp a box that leaks at most ``tolerance`` px outside the image.

    Larger excursions are annotation errors, not rounding artifacts, and
    raise ValueError. So does a box that collapses to zero size once clamped.
    """
    if image_w <= 0 or image_h <= 0:
        raise ValueError(f"image dimensions must be positive, got {image_w}x{image_h}")
    excess = max(
        -box.x_min,
        -box.y_min,
        box.x_max - image_w,
        box.y_max - image_h,
    )
    if excess > tolerance:
        raise ValueError(
            f"box {box.as_tuple()} exceeds image bounds {image_w}x{image_h} by {excess:.3f} px"
        )
    if excess <= 0.0:
        return box
    x_min = min(max(box.x_min, 0.0), float(image_w))
    y_min = min(max(box.y_min, 0.0), float(image_h))
    x_max = min(max(box.x_max, 0.0), float(image_w))
    y_max = min(max(box.y_max, 0.0), float(image_h))
    if not (x_min < x_max and y_min < y_max):
        raise ValueError(f"box {box.as_tuple()} collapses to zero size when clamped")
    return BBox(x_min, y_min, x_max, y_max)
