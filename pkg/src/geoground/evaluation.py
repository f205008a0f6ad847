"""Score predicted boxes against ground truth.

Three metrics over the M ground-truth samples: precision at IoU thresholds
(share of samples whose IoU meets the threshold, inclusive), the mean of the
per-sample intersection/union quotients, and the quotient of the summed
intersections and summed unions. A sample with no prediction scores zero
intersection against its own box area, so M never shrinks.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import GroundingSample, target_category
from .geometry import BBox
from .kernels import pair_inter_union

DEFAULT_THRESHOLDS = (0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class PredictionRecord:
    sample_id: str
    bbox: BBox
    score: float | None = None


@dataclass(frozen=True)
class EvalReport:
    precision_at: dict[float, float]
    mean_iou: float
    cum_iou: float
    sample_count: int
    per_category: dict[str, "EvalReport"] = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {
            "sample_count": self.sample_count,
            "precision_at": {f"{tau:g}": value for tau, value in self.precision_at.items()},
            "mean_iou": self.mean_iou,
            "cum_iou": self.cum_iou,
        }
        if self.per_category:
            doc["per_category"] = {
                cat: rep.to_dict() for cat, rep in sorted(self.per_category.items())
            }
        return doc


def _score(ious: np.ndarray, inters: np.ndarray, unions: np.ndarray,
           thresholds: tuple[float, ...]) -> tuple[dict[float, float], float, float]:
    m = len(ious)
    precision = {tau: float(np.count_nonzero(ious >= tau)) / m for tau in thresholds}
    mean_iou = float(ious.sum()) / m
    cum_iou = float(inters.sum()) / float(unions.sum())
    return precision, mean_iou, cum_iou


def evaluate_predictions(preds: list[PredictionRecord],
                         truth: list[GroundingSample],
                         thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
                         ) -> EvalReport:
    """Evaluate one prediction per sample; order of inputs never matters.

    Unknown or duplicated sample ids are hard errors. Thresholds compare
    inclusively (IoU equal to the threshold counts as correct).
    """
    if not truth:
        raise ValueError("cannot evaluate against an empty ground-truth set")
    thresholds = tuple(sorted(thresholds))
    if any(not 0.0 < tau <= 1.0 for tau in thresholds):
        raise ValueError(f"thresholds must lie in (0, 1], got {thresholds}")

    by_id: dict[str, PredictionRecord] = {}
    truth_ids = {t.sample_id for t in truth}
    for pred in preds:
        if pred.sample_id in by_id:
            raise ValueError(f"duplicate prediction for sample {pred.sample_id!r}")
        if pred.sample_id not in truth_ids:
            raise ValueError(f"prediction for unknown sample {pred.sample_id!r}")
        by_id[pred.sample_id] = pred

    ordered = sorted(truth, key=lambda t: t.sample_id)
    matched = [(t, by_id.get(t.sample_id)) for t in ordered]

    paired = [(t, p) for t, p in matched if p is not None]
    inters = np.zeros(len(ordered), dtype=np.float64)
    unions = np.array([t.bbox.area for t in ordered], dtype=np.float64)
    if paired:
        gt_arr = np.array([t.bbox.as_tuple() for t, _ in paired], dtype=np.float64)
        pred_arr = np.array([p.bbox.as_tuple() for _, p in paired], dtype=np.float64)
        pair_inter, pair_union = pair_inter_union(gt_arr, pred_arr)
        index_of = {t.sample_id: i for i, t in enumerate(ordered)}
        for (t, _), inter, union in zip(paired, pair_inter, pair_union):
            inters[index_of[t.sample_id]] = inter
            unions[index_of[t.sample_id]] = union
    ious = inters / unions

    precision, mean_iou, cum_iou = _score(ious, inters, unions, thresholds)

    per_category: dict[str, EvalReport] = {}
    categories = sorted({target_category(t.expression) for t in ordered})
    for category in categories:
        mask = np.array([target_category(t.expression) == category for t in ordered])
        cat_prec, cat_mean, cat_cum = _score(ious[mask], inters[mask], unions[mask],
                                             thresholds)
        per_category[category] = EvalReport(cat_prec, cat_mean, cat_cum,
                                            int(mask.sum()))

    return EvalReport(precision, mean_iou, cum_iou, len(ordered), per_category)


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    """Read predictions JSONL: {sample_id, bbox: [x1, y1, x2, y2], score?}."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                records.append(PredictionRecord(
                    sample_id=str(rec["sample_id"]),
                    bbox=BBox(*rec["bbox"]),
                    score=rec.get("score"),
                ))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad prediction at line {lineno}: {exc}") from exc
    return records


def save_report(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Write the JSON document and a CSV with one row per category."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = out / "evaluation.json"
    with open(doc, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")

    table = out / "evaluation.csv"
    taus = sorted(report.precision_at)
    header = ["category", "samples"] + [f"pr@{tau:g}" for tau in taus] + ["mean_iou", "cum_iou"]
    rows = [["all", report.sample_count]
            + [report.precision_at[tau] for tau in taus]
            + [report.mean_iou, report.cum_iou]]
    for category, rep in sorted(report.per_category.items()):
        rows.append([category, rep.sample_count]
                    + [rep.precision_at[tau] for tau in taus]
                    + [rep.mean_iou, rep.cum_iou])
    with open(table, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return [doc, table]
