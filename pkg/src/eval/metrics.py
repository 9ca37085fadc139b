"""Segmentation and point-localization metrics."""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.core.base import BleedAnnotation
from src.core.errors import InputError


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """|P & G| / |P | G|; 1.0 when both are empty."""
    _check_shapes(pred, gt)
    pred, gt = pred.astype(bool), gt.astype(bool)
    union = np.logical_or(pred, gt).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(pred, gt).sum() / union)


def dice_score(pred: np.ndarray, gt: np.ndarray) -> float:
    """2|P & G| / (|P| + |G|); 1.0 when both are empty."""
    _check_shapes(pred, gt)
    pred, gt = pred.astype(bool), gt.astype(bool)
    total = pred.sum() + gt.sum()
    if total == 0:
        return 1.0
    return float(2.0 * np.logical_and(pred, gt).sum() / total)


def false_positive_rate(pred: np.ndarray) -> float:
    """Fraction of the frame predicted as bleed (meaningful on empty-GT frames)."""
    return float(pred.astype(bool).mean())


@dataclass(frozen=True)
class PointRecord:
    """A declared or absent point prediction in pixel coordinates."""
    point: Optional[tuple[float, float]]
    score: float


def point_correct(
    pred: PointRecord, gt: BleedAnnotation, k: float, size: tuple[int, int], threshold: float = 0.5
) -> bool:
    """Declared point within k * image diagonal of the GT point (inclusive)."""
    if gt.point is None or pred.point is None or pred.score < threshold:
        return False
    height, width = size
    distance = math.hypot(pred.point[0] - gt.point[0], pred.point[1] - gt.point[1])
    return distance <= k * math.hypot(height, width)


def pck(
    preds: Sequence[PointRecord],
    gts: Sequence[BleedAnnotation],
    k: float,
    size: tuple[int, int],
    threshold: float = 0.5,
) -> Optional[float]:
    """
    Percentage of correct keypoints at a fraction k of the image diagonal.

    Only frames with a GT point are eligible; an undeclared point on an
    eligible frame counts as incorrect.

    Returns:
        correct / eligible, or None when no frame is eligible
    """
    if len(preds) != len(gts):
        raise InputError(f"pck needs aligned lists, got {len(preds)} predictions and {len(gts)} annotations")
    eligible = [(p, g) for p, g in zip(preds, gts) if g.has_point]
    if not eligible:
        return None
    correct = sum(point_correct(p, g, k, size, threshold) for p, g in eligible)
    return correct / len(eligible)


def existence_counts(
    preds: Sequence[PointRecord], gts: Sequence[BleedAnnotation], threshold: float = 0.5
) -> tuple[int, int, int]:
    """(true positives, false positives, false negatives) of point existence."""
    tp = fp = fn = 0
    for p, g in zip(preds, gts):
        declared = p.point is not None and p.score >= threshold
        if declared and g.has_point:
            tp += 1
        elif declared:
            fp += 1
        elif g.has_point:
            fn += 1
    return tp, fp, fn


def precision_recall(tp: int, fp: int, fn: int) -> tuple[Optional[float], Optional[float]]:
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    return precision, recall


def _check_shapes(pred: np.ndarray, gt: np.ndarray) -> None:
    if pred.shape != gt.shape:
        raise InputError(f"Mask shapes differ: {pred.shape} vs {gt.shape}")
