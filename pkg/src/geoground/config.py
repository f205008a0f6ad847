"""Attribute-extraction thresholds and word tables.

Defaults are compiled in; every table can be overridden from an INI-style
key-value file (pointed to by ``REFEXP_CONFIG`` or passed explicitly).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

COLOR_WORDS = (
    "red", "orange", "yellow", "green", "cyan",
    "blue", "purple", "white", "gray", "black",
)
SIZE_WORDS = ("tiny", "small", "large", "huge")
GEOMETRY_WORDS = ("round", "square", "rectangular", "slender")
LOCATION_WORDS = (
    "top left", "top", "top right",
    "left", "middle", "right",
    "bottom left", "bottom", "bottom right",
)
REL_LOCATION_WORDS = (
    "left of", "right of", "above", "below",
    "upper left of", "upper right of", "lower left of", "lower right of",
)
REL_SIZE_WORDS = ("smaller than", "larger than")

BLACK_BIN = COLOR_WORDS.index("black")
GRAY_BIN = COLOR_WORDS.index("gray")
WHITE_BIN = COLOR_WORDS.index("white")

# Hue ranges in degrees, half-open [lo, hi); red wraps around 0.
DEFAULT_HUE_RANGES: tuple[tuple[float, float, str], ...] = (
    (345.0, 360.0, "red"),
    (0.0, 15.0, "red"),
    (15.0, 45.0, "orange"),
    (45.0, 70.0, "yellow"),
    (70.0, 160.0, "green"),
    (160.0, 200.0, "cyan"),
    (200.0, 260.0, "blue"),
    (260.0, 345.0, "purple"),
)

# Area-ratio bands; the gap between "small" and "large" is deliberate so
# medium objects carry no size word. The top band is closed at its upper edge.
DEFAULT_SIZE_BANDS: tuple[tuple[float, float, str], ...] = (
    (0.0002, 0.001, "tiny"),
    (0.001, 0.01, "small"),
    (0.1, 0.35, "large"),
    (0.35, 0.99, "huge"),
)

# Categories whose shape is known up front, both spaced and concatenated
# spellings of the usual aerial-imagery class names.
DEFAULT_FIXED_SHAPES: dict[str, str] = {
    "storage tank": "round",
    "storagetank": "round",
    "basketball court": "rectangular",
    "basketballcourt": "rectangular",
    "tennis court": "rectangular",
    "tenniscourt": "rectangular",
}


@dataclass(frozen=True)
class AttributeConfig:
    hue_ranges: tuple[tuple[float, float, str], ...] = DEFAULT_HUE_RANGES
    value_black: float = 0.2
    saturation_neutral: float = 0.2
    value_white: float = 0.8
    color_share_threshold: float = 0.40
    size_bands: tuple[tuple[float, float, str], ...] = DEFAULT_SIZE_BANDS
    fixed_shapes: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_FIXED_SHAPES))
    slender_aspect: float = 3.0
    square_aspect: float = 1.2
    circularity_round: float = 0.85
    poly_epsilon: float = 0.02
    rel_overlap_gate: float = 0.1
    rel_smaller_ratio: float = 0.5
    rel_larger_ratio: float = 2.0

    def hue_tables(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Hue ranges as the three flat arrays the pixel kernel consumes."""
        lo = np.array([r[0] for r in self.hue_ranges], dtype=np.float64)
        hi = np.array([r[1] for r in self.hue_ranges], dtype=np.float64)
        bins = np.array([COLOR_WORDS.index(r[2]) for r in self.hue_ranges], dtype=np.int64)
        return lo, hi, bins

    def validate(self) -> None:
        edges = sorted((lo, hi) for lo, hi, _ in self.hue_ranges)
        cursor = 0.0
        for lo, hi in edges:
            if lo != cursor:
                raise ValueError(f"hue ranges must cover [0, 360) without gaps; hole before {lo}")
            cursor = hi
        if cursor != 360.0:
            raise ValueError("hue ranges must cover [0, 360) without gaps; ends at "
                             f"{cursor}")
        for lo, hi, word in self.size_bands:
            if not 0.0 <= lo < hi <= 1.0:
                raise ValueError(f"bad size band {lo}:{hi}:{word}")
        for word in (shape for shape in self.fixed_shapes.values()):
            if word not in GEOMETRY_WORDS:
                raise ValueError(f"unknown shape word {word!r} in fixed-shape table")


def _parse_range(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition(":")
    return float(lo), float(hi)


def load_config(path: str | Path) -> AttributeConfig:
    """Load threshold tables from an INI file, filling gaps with defaults.

    Sections: ``[shapes]`` category = shape word; ``[color]`` scalar
    thresholds plus optional per-color hue ranges like ``blue = 200:260``
    (comma-separated for split ranges); ``[size_bands]`` word = lo:hi;
    ``[geometry]`` and ``[relations]`` scalar thresholds.
    """
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise ValueError(f"config file not readable: {path}")

    cfg = AttributeConfig()
    updates: dict = {}

    if parser.has_section("shapes"):
        shapes = dict(cfg.fixed_shapes)
        shapes.update({k.strip().lower(): v.strip() for k, v in parser.items("shapes")})
        updates["fixed_shapes"] = shapes

    if parser.has_section("color"):
        sect = parser["color"]
        for key, attr in (("value_black", "value_black"),
                          ("saturation_neutral", "saturation_neutral"),
                          ("value_white", "value_white"),
                          ("share_threshold", "color_share_threshold")):
            if key in sect:
                updates[attr] = sect.getfloat(key)
        hue_ranges = []
        for word in COLOR_WORDS:
            if word in sect and word not in ("white", "gray", "black"):
                for part in sect[word].split(","):
                    lo, hi = _parse_range(part.strip())
                    hue_ranges.append((lo, hi, word))
        if hue_ranges:
            updates["hue_ranges"] = tuple(hue_ranges)

    if parser.has_section("size_bands"):
        bands = []
        for word in SIZE_WORDS:
            if parser.has_option("size_bands", word):
                lo, hi = _parse_range(parser.get("size_bands", word))
                bands.append((lo, hi, word))
        if bands:
            updates["size_bands"] = tuple(bands)

    if parser.has_section("geometry"):
        sect = parser["geometry"]
        for key in ("slender_aspect", "square_aspect", "circularity_round", "poly_epsilon"):
            if key in sect:
                updates[key] = sect.getfloat(key)

    if parser.has_section("relations"):
        sect = parser["relations"]
        for key, attr in (("overlap_gate", "rel_overlap_gate"),
                          ("smaller_ratio", "rel_smaller_ratio"),
                          ("larger_ratio", "rel_larger_ratio")):
            if key in sect:
                updates[attr] = sect.getfloat(key)

    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg
