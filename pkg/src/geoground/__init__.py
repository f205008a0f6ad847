"""Referring-expression grounding dataset toolkit.

Builds image/expression/box datasets from object-detection annotations,
serves them for human review, and evaluates grounding predictions.
"""

from .geometry import BBox, area_ratio, giou, iou

__all__ = ["BBox", "area_ratio", "giou", "iou"]
__version__ = "0.1.0"
