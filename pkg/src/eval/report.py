"""Evaluation report: per-clip metric sums and frame-weighted aggregates."""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np

from src.core.base import BleedAnnotation
from src.eval.metrics import (
    PointRecord,
    dice_score,
    existence_counts,
    false_positive_rate,
    iou,
    point_correct,
    precision_recall,
)

SCHEMA_VERSION = 1


@dataclass
class ClipMetrics:
    """Sums and counts for one clip; means are derived so aggregation stays exact."""
    clip_id: str
    frames: int = 0
    region_frames: int = 0  # frames with a nonempty GT mask
    empty_frames: int = 0
    point_frames: int = 0  # frames with a GT point
    iou_sum: float = 0.0
    dice_sum: float = 0.0
    fp_sum: float = 0.0
    pck_correct: dict[str, int] = field(default_factory=dict)
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def summary(self) -> dict[str, Any]:
        return _summarize(self.__dict__)


def score_clip(
    clip_id: str,
    masks: Sequence[np.ndarray],
    points: Sequence[PointRecord],
    gts: Sequence[BleedAnnotation],
    size: tuple[int, int],
    thresholds: Sequence[float],
    existence_threshold: float = 0.5,
) -> ClipMetrics:
    """Score aligned per-frame predictions of one clip against ground truth."""
    metrics = ClipMetrics(clip_id=clip_id, pck_correct={_key(k): 0 for k in thresholds})
    for mask, point, gt in zip(masks, points, gts):
        metrics.frames += 1
        if gt.has_region:
            metrics.region_frames += 1
            metrics.iou_sum += iou(mask, gt.mask)
            metrics.dice_sum += dice_score(mask, gt.mask)
        else:
            metrics.empty_frames += 1
            metrics.fp_sum += false_positive_rate(mask)
        if gt.has_point:
            metrics.point_frames += 1
            for k in thresholds:
                metrics.pck_correct[_key(k)] += int(point_correct(point, gt, k, size, existence_threshold))
    metrics.tp, metrics.fp, metrics.fn = existence_counts(points, gts, existence_threshold)
    return metrics


@dataclass
class EvalReport:
    split: str
    thresholds: tuple[float, ...]
    clips: list[ClipMetrics]
    checkpoint: Optional[str] = None
    failed: list[dict[str, str]] = field(default_factory=list)

    def aggregate(self) -> dict[str, Any]:
        """Frame-weighted means over all clips, independent of clip order."""
        totals: dict[str, Any] = {
            key: 0 for key in ("frames", "region_frames", "empty_frames", "point_frames", "tp", "fp", "fn")
        }
        totals.update(iou_sum=0.0, dice_sum=0.0, fp_sum=0.0, pck_correct={_key(k): 0 for k in self.thresholds})
        for clip in sorted(self.clips, key=lambda c: c.clip_id):
            for key in ("frames", "region_frames", "empty_frames", "point_frames", "tp", "fp", "fn"):
                totals[key] += getattr(clip, key)
            for key in ("iou_sum", "dice_sum", "fp_sum"):
                totals[key] += getattr(clip, key)
            for k, count in clip.pck_correct.items():
                totals["pck_correct"][k] = totals["pck_correct"].get(k, 0) + count
        return _summarize(totals)

    def metric(self, name: str, k: Optional[float] = None) -> Optional[float]:
        agg = self.aggregate()
        return agg["pck"][_key(k)] if name == "pck" else agg[name]

    def selection_score(self) -> float:
        """Mean of IoU and the loosest PCK, missing values counted as 0."""
        iou_value = self.metric("iou") or 0.0
        pck_value = self.metric("pck", max(self.thresholds)) or 0.0
        return 0.5 * (iou_value + pck_value)

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "split": self.split,
            "checkpoint": self.checkpoint,
            "pck_thresholds": [float(k) for k in self.thresholds],
            "aggregate": self.aggregate(),
            "clips": {c.clip_id: c.summary() for c in sorted(self.clips, key=lambda c: c.clip_id)},
            "failed_clips": sorted(self.failed, key=lambda f: f["clip_id"]),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")
        return path


def validate_report(data: Any) -> list[str]:
    """Schema check of a loaded report; returns a list of problems."""
    errors = []
    if not isinstance(data, dict):
        return ["report must be an object"]
    if data.get("schema_version") != SCHEMA_VERSION:
        errors.append(f"schema_version must be {SCHEMA_VERSION}")
    for key in ("split", "pck_thresholds", "aggregate", "clips", "failed_clips"):
        if key not in data:
            errors.append(f"missing '{key}'")
    thresholds = data.get("pck_thresholds", [])
    for scope, summary in [("aggregate", data.get("aggregate"))] + list((data.get("clips") or {}).items()):
        if not isinstance(summary, dict):
            errors.append(f"{scope}: summary must be an object")
            continue
        for key in ("iou", "dice", "pck", "fp_area_rate", "existence_precision", "existence_recall", "counts"):
            if key not in summary:
                errors.append(f"{scope}: missing '{key}'")
        pck_values = summary.get("pck") or {}
        for k in thresholds:
            if _key(k) not in pck_values:
                errors.append(f"{scope}: missing pck at {k}")
        for key in ("iou", "dice", "fp_area_rate", "existence_precision", "existence_recall"):
            value = summary.get(key)
            if value is not None and not (isinstance(value, (int, float)) and 0.0 <= value <= 1.0):
                errors.append(f"{scope}: {key}={value!r} outside [0, 1]")
    return errors


def _summarize(sums: dict[str, Any]) -> dict[str, Any]:
    region, empty, points = sums["region_frames"], sums["empty_frames"], sums["point_frames"]
    precision, recall = precision_recall(sums["tp"], sums["fp"], sums["fn"])
    return {
        "iou": sums["iou_sum"] / region if region else None,
        "dice": sums["dice_sum"] / region if region else None,
        "fp_area_rate": sums["fp_sum"] / empty if empty else None,
        "pck": {k: (count / points if points else None) for k, count in sums["pck_correct"].items()},
        "existence_precision": precision,
        "existence_recall": recall,
        "counts": {
            "frames": sums["frames"],
            "region_frames": region,
            "empty_frames": empty,
            "point_frames": points,
        },
    }


def _key(k: float) -> str:
    return f"{float(k):.4g}"
