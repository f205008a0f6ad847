"""Box sampling: drop extreme-area boxes and cap same-category crowding.

Filters run in order inverted -> area -> cap, so the per-(image, category)
cap counts only boxes that already passed the area filter. Both area bounds
are inclusive: a box is dropped only when its ratio is strictly below the
minimum or strictly above the maximum.
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass

from .geometry import area_ratio
from .ingest import ImageRecord, ObjectInstance


class DropReason(enum.Enum):
    INVERTED = "inverted"
    TOO_SMALL = "too_small"
    TOO_LARGE = "too_large"
    CATEGORY_CAP = "category_cap"


@dataclass(frozen=True)
class SamplingConfig:
    min_area_ratio: float = 0.0002
    max_area_ratio: float = 0.99
    max_per_category: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_area_ratio < self.max_area_ratio <= 1.0:
            raise ValueError(
                f"need 0 <= min_area_ratio < max_area_ratio <= 1, got "
                f"{self.min_area_ratio} and {self.max_area_ratio}")
        if self.max_per_category < 1:
            raise ValueError("max_per_category must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def derive_seed(*parts: int | str) -> int:
    """Stable 64-bit sub-seed from mixed parts; independent of PYTHONHASHSEED."""
    digest = hashlib.blake2b(
        "\x1f".join(str(p) for p in parts).encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def sample_boxes(
    objects: list[ObjectInstance],
    images: dict[str, ImageRecord],
    cfg: SamplingConfig,
) -> tuple[list[ObjectInstance], list[tuple[ObjectInstance, DropReason]]]:
    """Partition objects into (kept, dropped-with-reason).

    Kept and dropped always partition the input. Within each (image,
    category) group the survivors of the area filter are capped at
    ``max_per_category`` by seeded uniform sampling without replacement, so
    re-running on the kept set is a no-op and identical seeds give identical
    output.
    """
    kept: list[ObjectInstance] = []
    dropped: list[tuple[ObjectInstance, DropReason]] = []
    groups: dict[tuple[str, str], list[ObjectInstance]] = {}

    for obj in sorted(objects, key=lambda o: (o.image_id, o.object_id)):
        image = images.get(obj.image_id)
        if image is None:
            raise KeyError(f"object {obj.object_id}: unknown image_id {obj.image_id!r}")
        box = obj.bbox
        if not (box.x_min < box.x_max and box.y_min < box.y_max):
            dropped.append((obj, DropReason.INVERTED))
            continue
        ratio = area_ratio(box, image.width, image.height)
        if ratio < cfg.min_area_ratio:
            dropped.append((obj, DropReason.TOO_SMALL))
            continue
        if ratio > cfg.max_area_ratio:
            dropped.append((obj, DropReason.TOO_LARGE))
            continue
        groups.setdefault((obj.image_id, obj.category), []).append(obj)

    for (image_id, category), members in sorted(groups.items()):
        if len(members) <= cfg.max_per_category:
            kept.extend(members)
            continue
        rng = random.Random(derive_seed(cfg.seed, image_id, category))
        chosen = set(rng.sample(range(len(members)), cfg.max_per_category))
        for idx, obj in enumerate(members):
            if idx in chosen:
                kept.append(obj)
            else:
                dropped.append((obj, DropReason.CATEGORY_CAP))

    kept.sort(key=lambda o: (o.image_id, o.object_id))
    dropped.sort(key=lambda d: (d[0].image_id, d[0].object_id))
    return kept, dropped
