"""Tests for metrics, report aggregation and online evaluation."""

import json
import math

import numpy as np
import pytest

from src.core.base import BleedAnnotation
from src.core.errors import InputError
from src.data.clips import BleedDataset
from src.eval import (
    EvalReport,
    Evaluator,
    PointRecord,
    dice_score,
    evaluate,
    iou,
    pck,
    score_clip,
    validate_report,
)

from .conftest import make_clip, random_mask

SIZE = (30, 40)  # diagonal 50
THRESHOLDS = (0.02, 0.05, 0.10)


def shifted_blocks():
    a = np.zeros((6, 6), dtype=bool)
    b = np.zeros((6, 6), dtype=bool)
    a[1:3, 1:3] = True
    b[1:3, 2:4] = True
    return a, b


class TestMaskMetrics:
    def test_identical_and_disjoint(self):
        a, _ = shifted_blocks()
        far = np.zeros_like(a)
        far[4:, 4:] = True
        assert iou(a, a) == 1.0 and dice_score(a, a) == 1.0
        assert iou(a, far) == 0.0 and dice_score(a, far) == 0.0

    def test_shifted_block(self):
        a, b = shifted_blocks()
        assert iou(a, b) == pytest.approx(1 / 3)
        assert dice_score(a, b) == pytest.approx(0.5)

    def test_both_empty(self):
        empty = np.zeros((4, 4), dtype=bool)
        assert iou(empty, empty) == 1.0 and dice_score(empty, empty) == 1.0

    def test_dice_iou_identity(self):
        generator = np.random.default_rng(0)
        for _ in range(1000):
            p, g = random_mask(generator), random_mask(generator)
            j = iou(p, g)
            assert dice_score(p, g) == pytest.approx(2 * j / (1 + j), abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(InputError):
            iou(np.zeros((3, 3)), np.zeros((4, 4)))


class TestPck:
    def test_counts_errors_against_diagonal(self):
        gts = [BleedAnnotation(point=(10.0, 10.0))] * 3
        preds = [PointRecord((10.0 + e * 50.0, 10.0), 0.9) for e in (0.0, 0.04, 0.2)]
        assert pck(preds, gts, 0.05, SIZE) == pytest.approx(2 / 3)

    def test_boundary_is_inclusive(self):
        gts = [BleedAnnotation(point=(0.0, 0.0))]
        preds = [PointRecord((30.0, 40.0), 0.9)]  # distance 50 = 1.0 x diagonal
        assert pck(preds, gts, 1.0, SIZE) == 1.0

    def test_undeclared_points_are_wrong(self):
        gts = [BleedAnnotation(point=(5.0, 5.0))]
        assert pck([PointRecord((5.0, 5.0), 0.2)], gts, 0.1, SIZE) == 0.0
        assert pck([PointRecord(None, 0.0)], gts, 0.1, SIZE) == 0.0

    def test_frames_without_gt_point_are_excluded(self):
        gts = [BleedAnnotation(point=(5.0, 5.0)), BleedAnnotation()]
        preds = [PointRecord((5.0, 5.0), 0.9), PointRecord((20.0, 20.0), 0.9)]
        assert pck(preds, gts, 0.02, SIZE) == 1.0
        assert pck(preds[1:], gts[1:], 0.02, SIZE) is None

    def test_monotone_in_threshold(self):
        generator = np.random.default_rng(3)
        gts = [BleedAnnotation(point=tuple(generator.uniform(0, 29, 2))) for _ in range(50)]
        preds = [PointRecord(tuple(generator.uniform(0, 29, 2)), generator.uniform()) for _ in range(50)]
        values = [pck(preds, gts, k, SIZE) for k in (0.01, 0.02, 0.05, 0.1, 0.3, 1.0)]
        assert values == sorted(values)

    def test_misaligned_lists(self):
        with pytest.raises(InputError):
            pck([], [BleedAnnotation()], 0.05, SIZE)


def oracle_report(clips, jobs=1, tiny_config=None):
    return Evaluator(None, tiny_config, oracle=True, jobs=jobs).evaluate_clips(clips)


class TestReport:
    def test_oracle_scores_perfectly(self, tiny_config):
        clips = [make_clip(f"c{i}", seed=i)[0] for i in range(3)]
        agg = oracle_report(clips, tiny_config=tiny_config).aggregate()
        assert agg["iou"] == 1.0 and agg["dice"] == 1.0
        assert all(v == 1.0 for v in agg["pck"].values())
        assert agg["existence_recall"] == 1.0
        assert agg["fp_area_rate"] in (None, 0.0)

    def test_empty_predictions_are_the_lower_bound(self, synthetic_clip):
        masks = [np.zeros(synthetic_clip.size, dtype=bool)] * len(synthetic_clip)
        points = [PointRecord(None, 0.0)] * len(synthetic_clip)
        metrics = score_clip("a", masks, points, synthetic_clip.annotations, synthetic_clip.size, THRESHOLDS)
        summary = metrics.summary()
        assert summary["iou"] == 0.0
        assert all(v == 0.0 for v in summary["pck"].values())
        assert summary["existence_recall"] == 0.0

    def test_clip_order_does_not_matter(self, tiny_config):
        clips = [make_clip(f"c{i}", seed=i)[0] for i in range(3)]
        forward = oracle_report(clips, tiny_config=tiny_config)
        backward = oracle_report(clips[::-1], jobs=3, tiny_config=tiny_config)
        assert forward.to_json() == backward.to_json()

    def test_aggregate_is_frame_weighted(self):
        gt = np.zeros((4, 4), dtype=bool)
        gt[:2] = True
        half = np.zeros((4, 4), dtype=bool)
        half[:1] = True
        one = score_clip("one", [gt], [PointRecord(None, 0.0)], [BleedAnnotation(mask=gt)], (4, 4), THRESHOLDS)
        three = score_clip(
            "three", [half] * 3, [PointRecord(None, 0.0)] * 3, [BleedAnnotation(mask=gt)] * 3, (4, 4), THRESHOLDS
        )
        report = EvalReport(split="test", thresholds=THRESHOLDS, clips=[one, three])
        assert report.metric("iou") == pytest.approx((1.0 + 3 * 0.5) / 4)

    def test_json_is_valid_and_sorted(self, tiny_config):
        clips = [make_clip("c0")[0]]
        data = json.loads(oracle_report(clips, tiny_config=tiny_config).to_json())
        assert validate_report(data) == []
        assert list(data["aggregate"]["pck"]) == ["0.02", "0.05", "0.1"]

    def test_validation_catches_problems(self):
        assert validate_report([]) == ["report must be an object"]
        errors = validate_report({"schema_version": 1, "aggregate": {"iou": 1.5}})
        assert any("iou" in e for e in errors)
        assert any("missing 'clips'" in e for e in errors)

    def test_selection_score(self, tiny_config):
        report = oracle_report([make_clip("c0")[0]], tiny_config=tiny_config)
        assert report.selection_score() == pytest.approx(1.0)


class TestEvaluator:
    def test_detector_run_reports_every_clip(self, dataset_root, detector_factory, tiny_config):
        dataset = BleedDataset(dataset_root)
        specs = [make_clip(cid, seed=i)[1] for i, cid in enumerate(["clip_a", "clip_b", "clip_c"])]
        detector = detector_factory(specs=tuple(specs))
        report = evaluate(detector, dataset, "train", tiny_config, jobs=2)
        assert [c.clip_id for c in report.clips] == ["clip_a", "clip_b"]
        assert report.failed == []
        agg = report.aggregate()
        assert agg["counts"]["frames"] == 12
        assert validate_report(report.to_dict()) == []

    def test_evaluation_is_reproducible(self, dataset_root, detector_factory, tiny_config):
        dataset = BleedDataset(dataset_root)
        specs = tuple(make_clip(cid, seed=i)[1] for i, cid in enumerate(["clip_a", "clip_b", "clip_c"]))
        detector = detector_factory(specs=specs)
        first = evaluate(detector, dataset, "train", tiny_config, jobs=1).to_json()
        second = evaluate(detector, dataset, "train", tiny_config, jobs=2).to_json()
        assert first == second

    def test_parallel_clips_use_private_detector_copies(self, detector_factory, tiny_config):
        detector = detector_factory(specs=(make_clip("clip_a")[1],))
        detector.train()
        evaluator = Evaluator(detector, tiny_config, jobs=2)
        private = evaluator._worker_detector()
        assert private is not detector
        assert private.flow_backend is detector.flow_backend
        evaluator.evaluate_clips([make_clip("clip_a")[0]])
        assert detector.training
        assert Evaluator(detector, tiny_config, jobs=1)._worker_detector() is detector

    def test_broken_clip_is_skipped(self, dataset_root, tiny_config):
        (dataset_root / "clips" / "clip_b" / "frames" / "000003.png").unlink()
        report = evaluate(None, BleedDataset(dataset_root), "train", tiny_config, oracle=True)
        assert [c.clip_id for c in report.clips] == ["clip_a"]
        assert report.failed[0]["clip_id"] == "clip_b"

    def test_detector_required_without_oracle(self, tiny_config):
        with pytest.raises(ValueError):
            Evaluator(None, tiny_config)
