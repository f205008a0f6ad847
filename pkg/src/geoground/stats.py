"""Dataset analyses: frequencies, resolvability shares, length and box stats.

Resolvability shares (how many expressions pin their object down by category
alone, by own attributes, or via a relation) are computed with the
resolver oracle on structured fills, not by string matching.
"""

from __future__ import annotations

import csv
import json
import string
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .attributes import Scene
from .dataset import GroundingSample
from .expressions import PhraseFills, SentenceFills, resolve_expression
from .geometry import area_ratio

WIDTH_BIN_PX = 50.0
RATIO_BIN = 0.05


def tokenize(text: str) -> list[str]:
    """Lower-case whitespace tokens with edge punctuation stripped."""
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(string.punctuation)
        if token:
            tokens.append(token)
    return tokens


@dataclass
class StatsReport:
    pair_count: int
    image_count: int
    vocabulary_size: int
    category_freq: dict[str, int]
    attrs_per_expression_hist: dict[int, int]
    per_category_attribute_usage: dict[str, dict[str, int]]
    share_cat: float
    share_cat_plus: float
    share_att: float
    share_att_plus: float
    share_rel: float
    share_rel_plus: float
    length_mean: float
    length_min: int
    length_max: int
    length_hist: dict[int, int]
    box_width_hist: dict[str, int] = field(default_factory=dict)
    box_height_hist: dict[str, int] = field(default_factory=dict)
    area_ratio_hist: dict[str, int] = field(default_factory=dict)
    word_freq: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "pair_count": self.pair_count,
            "image_count": self.image_count,
            "vocabulary_size": self.vocabulary_size,
            "category_freq": dict(sorted(self.category_freq.items())),
            "attrs_per_expression_hist": {str(k): v for k, v in
                                          sorted(self.attrs_per_expression_hist.items())},
            "per_category_attribute_usage": {
                cat: dict(sorted(usage.items()))
                for cat, usage in sorted(self.per_category_attribute_usage.items())
            },
            "shares": {
                "cat": self.share_cat,
                "cat_plus": self.share_cat_plus,
                "att": self.share_att,
                "att_plus": self.share_att_plus,
                "rel": self.share_rel,
                "rel_plus": self.share_rel_plus,
            },
            "length": {
                "mean": self.length_mean,
                "min": self.length_min,
                "max": self.length_max,
                "hist": {str(k): v for k, v in sorted(self.length_hist.items())},
            },
            "box": {
                "width_hist": dict(sorted(self.box_width_hist.items())),
                "height_hist": dict(sorted(self.box_height_hist.items())),
                "area_ratio_hist": dict(sorted(self.area_ratio_hist.items())),
            },
            "word_freq": dict(sorted(self.word_freq.items())),
        }


def _bin_label(value: float, width: float) -> str:
    index = int(value / width)
    lo = index * width
    return f"{lo:g}-{lo + width:g}"


def _fill_count(fills: PhraseFills | SentenceFills) -> int:
    """Number of attribute slots the expression uses, counting categories
    and the relation itself."""
    if isinstance(fills, PhraseFills):
        return 1 + len(fills.constraints())
    count = 1 + len(fills.subject.constraints())  # subject category + its attrs
    count += 1  # the relation
    count += 1  # anchor category
    if fills.anchor.attribute_slot is not None:
        count += 1
    return count


def compute_statistics(samples: list[GroundingSample],
                       scenes: list[Scene]) -> StatsReport:
    scene_by_image = {scene.image.image_id: scene for scene in scenes}

    category_freq: Counter = Counter()
    attrs_hist: Counter = Counter()
    usage: dict[str, Counter] = {}
    length_hist: Counter = Counter()
    word_freq: Counter = Counter()
    width_hist: Counter = Counter()
    height_hist: Counter = Counter()
    ratio_hist: Counter = Counter()

    n_cat_plus = n_att = n_att_plus = n_rel = n_rel_plus = 0
    lengths = []

    for sample in samples:
        scene = scene_by_image.get(sample.image_id)
        if scene is None:
            raise KeyError(f"sample {sample.sample_id}: no scene for image "
                           f"{sample.image_id!r}")
        fills = sample.expression.fills
        target = sample.expression.target_id

        if isinstance(fills, PhraseFills):
            category = fills.category
            own = fills.constraints()
        else:
            category = fills.subject.category
            own = fills.subject.constraints()
        category_freq[category] += 1
        attrs_hist[_fill_count(fills)] += 1

        cat_usage = usage.setdefault(category, Counter())
        for slot in own:
            cat_usage[slot] += 1
        if isinstance(fills, SentenceFills):
            cat_usage[fills.relation_kind.value] += 1

        # Resolver-based shares. cat is 1.0 by construction (every template
        # names the category) but is counted rather than assumed.
        if resolve_expression(PhraseFills(article="The", category=category),
                              scene) == {target}:
            n_cat_plus += 1
        if own:
            n_att += 1
            own_probe = PhraseFills(article="The", category=category,
                                    color=own.get("color"),
                                    size_word=own.get("size_word"),
                                    geometry=own.get("geometry"),
                                    abs_location=own.get("abs_location"))
            if resolve_expression(own_probe, scene) == {target}:
                n_att_plus += 1
        if isinstance(fills, SentenceFills):
            n_rel += 1
            if resolve_expression(fills, scene) == {target}:
                n_rel_plus += 1

        tokens = tokenize(sample.expression.text)
        lengths.append(len(tokens))
        length_hist[len(tokens)] += 1
        word_freq.update(tokens)

        width_hist[_bin_label(sample.bbox.width, WIDTH_BIN_PX)] += 1
        height_hist[_bin_label(sample.bbox.height, WIDTH_BIN_PX)] += 1
        ratio = area_ratio(sample.bbox, scene.image.width, scene.image.height)
        ratio_hist[_bin_label(ratio, RATIO_BIN)] += 1

    count = len(samples)

    def share(n: int) -> float:
        return n / count if count else 0.0

    return StatsReport(
        pair_count=count,
        image_count=len({s.image_id for s in samples}),
        vocabulary_size=len(word_freq),
        category_freq=dict(category_freq),
        attrs_per_expression_hist=dict(attrs_hist),
        per_category_attribute_usage={cat: dict(c) for cat, c in usage.items()},
        share_cat=share(count),
        share_cat_plus=share(n_cat_plus),
        share_att=share(n_att),
        share_att_plus=share(n_att_plus),
        share_rel=share(n_rel),
        share_rel_plus=share(n_rel_plus),
        length_mean=sum(lengths) / count if count else 0.0,
        length_min=min(lengths) if lengths else 0,
        length_max=max(lengths) if lengths else 0,
        length_hist=dict(length_hist),
        box_width_hist=dict(width_hist),
        box_height_hist=dict(height_hist),
        area_ratio_hist=dict(ratio_hist),
        word_freq=dict(word_freq),
    )


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def save_report(report: StatsReport, out_dir: str | Path) -> list[Path]:
    """Write the canonical JSON document plus one CSV per figure panel."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = out / "stats.json"
    with open(doc, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=False)
        fh.write("\n")
    written = [doc]

    tables: list[tuple[str, list[str], list[list]]] = [
        ("category_freq.csv", ["category", "count"],
         [[k, v] for k, v in sorted(report.category_freq.items())]),
        ("attrs_per_expression.csv", ["attribute_count", "expressions"],
         [[k, v] for k, v in sorted(report.attrs_per_expression_hist.items())]),
        ("attribute_usage.csv", ["category", "attribute", "count"],
         [[cat, slot, n] for cat, row in sorted(report.per_category_attribute_usage.items())
          for slot, n in sorted(row.items())]),
        ("resolvability.csv", ["measure", "share"],
         [["cat", report.share_cat], ["cat_plus", report.share_cat_plus],
          ["att", report.share_att], ["att_plus", report.share_att_plus],
          ["rel", report.share_rel], ["rel_plus", report.share_rel_plus]]),
        ("length_hist.csv", ["tokens", "expressions"],
         [[k, v] for k, v in sorted(report.length_hist.items())]),
        ("box_width_hist.csv", ["bin_px", "count"],
         [[k, v] for k, v in sorted(report.box_width_hist.items())]),
        ("box_height_hist.csv", ["bin_px", "count"],
         [[k, v] for k, v in sorted(report.box_height_hist.items())]),
        ("area_ratio_hist.csv", ["bin", "count"],
         [[k, v] for k, v in sorted(report.area_ratio_hist.items())]),
        ("word_freq.csv", ["token", "count"],
         [[k, v] for k, v in sorted(report.word_freq.items(),
                                    key=lambda kv: (-kv[1], kv[0]))]),
    ]
    for name, header, rows in tables:
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)
    return written
