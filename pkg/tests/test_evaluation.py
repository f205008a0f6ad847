import json
import random
from dataclasses import replace

import numpy as np
import pytest

from geoground.dataset import build_dataset
from geoground.evaluation import (
    EvalReport,
    PredictionRecord,
    evaluate_predictions,
    load_predictions,
    save_report,
)
from geoground.geometry import BBox, iou
from tests.test_dataset import make_scene


def ground_truth(n=12, seed=5):
    scenes = [make_scene(f"im{i:03d}", [("airport", {})]) for i in range(n)]
    return build_dataset(scenes, seed=seed)


def perturbed(samples, rng):
    preds = []
    for sample in samples:
        dx = rng.uniform(-30, 30)
        dy = rng.uniform(-30, 30)
        box = sample.bbox
        preds.append(PredictionRecord(sample.sample_id, BBox(
            max(box.x_min + dx, 0), max(box.y_min + dy, 0),
            max(box.x_max + dx, 1), max(box.y_max + dy, 1))))
    return preds


class TestWorkedExamples:
    def test_perfect_predictions(self):
        truth = ground_truth()
        preds = [PredictionRecord(t.sample_id, t.bbox) for t in truth]
        report = evaluate_predictions(preds, truth)
        assert report.precision_at[0.9] == 1.0
        assert report.mean_iou == 1.0
        assert report.cum_iou == 1.0

    def test_two_sample_mean_vs_cumulative(self):
        truth = ground_truth(3)[:2]
        # sample 0: gt [0,0,2,2] vs pred [1,1,3,3] -> I=1, U=7, IoU=1/7
        # sample 1: gt [0,0,2,2] vs pred equal    -> I=4, U=4, IoU=1
        truth = [replace(truth[0], bbox=BBox(0, 0, 2, 2)),
                 replace(truth[1], bbox=BBox(0, 0, 2, 2))]
        preds = [
            PredictionRecord(truth[0].sample_id, BBox(1, 1, 3, 3)),
            PredictionRecord(truth[1].sample_id, BBox(0, 0, 2, 2)),
        ]
        report = evaluate_predictions(preds, truth)
        assert report.mean_iou == pytest.approx(4 / 7, abs=1e-12)
        assert report.cum_iou == pytest.approx(5 / 11, abs=1e-12)
        assert report.precision_at[0.5] == 0.5

    def test_missing_prediction_scores_zero(self):
        truth = ground_truth(4)
        preds = [PredictionRecord(t.sample_id, t.bbox) for t in truth[:2]]
        report = evaluate_predictions(preds, truth)
        assert report.mean_iou == pytest.approx(0.5)
        assert report.sample_count == 4

    def test_threshold_is_inclusive(self):
        truth = ground_truth(1)
        truth = [replace(truth[0], bbox=BBox(0, 0, 10, 10))]
        # IoU exactly 0.5: intersection 50, union 100
        preds = [PredictionRecord(truth[0].sample_id, BBox(0, 0, 10, 5))]
        report = evaluate_predictions(preds, truth, thresholds=(0.5,))
        assert iou(truth[0].bbox, preds[0].bbox) == 0.5
        assert report.precision_at[0.5] == 1.0


class TestValidation:
    def test_duplicate_prediction_rejected(self):
        truth = ground_truth(2)
        pred = PredictionRecord(truth[0].sample_id, truth[0].bbox)
        with pytest.raises(ValueError, match="duplicate"):
            evaluate_predictions([pred, pred], truth)

    def test_unknown_sample_rejected(self):
        truth = ground_truth(2)
        with pytest.raises(ValueError, match="unknown"):
            evaluate_predictions([PredictionRecord("nope", BBox(0, 0, 1, 1))], truth)

    def test_empty_truth_rejected(self):
        with pytest.raises(ValueError):
            evaluate_predictions([], [])


class TestProperties:
    def test_monotone_and_permutation_invariant(self):
        truth = ground_truth(40)
        rng = random.Random(99)
        preds = perturbed(truth, rng)
        report = evaluate_predictions(preds, truth)

        taus = sorted(report.precision_at)
        values = [report.precision_at[t] for t in taus]
        assert values == sorted(values, reverse=True)

        shuffled_preds = list(preds)
        shuffled_truth = list(truth)
        rng.shuffle(shuffled_preds)
        rng.shuffle(shuffled_truth)
        again = evaluate_predictions(shuffled_preds, shuffled_truth)
        assert again == report

    def test_matches_per_sample_oracle_exactly(self):
        truth = ground_truth(60)
        preds = perturbed(truth, random.Random(7))
        report = evaluate_predictions(preds, truth, thresholds=(0.5, 0.75))

        by_id = {p.sample_id: p for p in preds}
        ious, inters, unions = [], [], []
        for t in sorted(truth, key=lambda s: s.sample_id):
            p = by_id[t.sample_id]
            ious.append(iou(t.bbox, p.bbox))
            w = min(t.bbox.x_max, p.bbox.x_max) - max(t.bbox.x_min, p.bbox.x_min)
            h = min(t.bbox.y_max, p.bbox.y_max) - max(t.bbox.y_min, p.bbox.y_min)
            inter = w * h if w > 0 and h > 0 else 0.0
            inters.append(inter)
            unions.append(t.bbox.area + p.bbox.area - inter)
        assert report.mean_iou == float(np.mean(ious))
        assert report.cum_iou == float(np.sum(inters) / np.sum(unions))
        assert report.precision_at[0.5] == np.mean([v >= 0.5 for v in ious])

    def test_mean_equals_cumulative_for_equal_unions(self):
        truth = ground_truth(6)
        preds = [PredictionRecord(t.sample_id, t.bbox) for t in truth]
        report = evaluate_predictions(preds, truth)
        assert report.mean_iou == report.cum_iou

    def test_per_category_breakdown(self):
        scenes = [make_scene("a", [("airport", {})]), make_scene("b", [("dam", {})])]
        truth = build_dataset(scenes, seed=1)
        preds = [PredictionRecord(t.sample_id, t.bbox) for t in truth]
        report = evaluate_predictions(preds, truth)
        assert set(report.per_category) == {"airport", "dam"}
        assert all(rep.sample_count == 1 for rep in report.per_category.values())


class TestIO:
    def test_load_predictions(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        path.write_text(json.dumps({"sample_id": "s1", "bbox": [0, 0, 5, 5], "score": 0.9})
                        + "\n" + json.dumps({"sample_id": "s2", "bbox": [1, 1, 4, 4]}) + "\n")
        preds = load_predictions(path)
        assert preds[0].score == 0.9 and preds[1].score is None
        assert preds[1].bbox == BBox(1, 1, 4, 4)

    def test_bad_prediction_line(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        path.write_text('{"sample_id": "s1"}\n')
        with pytest.raises(ValueError, match="line 1"):
            load_predictions(path)

    def test_save_report(self, tmp_path):
        truth = ground_truth(3)
        preds = [PredictionRecord(t.sample_id, t.bbox) for t in truth]
        report = evaluate_predictions(preds, truth)
        written = save_report(report, tmp_path)
        assert {p.name for p in written} == {"evaluation.json", "evaluation.csv"}
        doc = json.loads((tmp_path / "evaluation.json").read_text())
        assert doc["mean_iou"] == 1.0
