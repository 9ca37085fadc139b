"""Segmentation and point losses."""

from typing import Optional

import torch
import torch.nn.functional as F
from torch import Tensor

from src.config import LossSection

LOGIT_CLAMP = 30.0
SCORE_EPS = 1e-7


def focal_loss(logits: Tensor, target: Tensor, alpha: float = 0.25, gamma: float = 2.0) -> Tensor:
    """Mean over pixels of -alpha_t (1 - p_t)^gamma log(p_t)."""
    logits = logits.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
    target = target.to(logits.dtype)
    ce = F.binary_cross_entropy_with_logits(logits, target, reduction="none")
    p = torch.sigmoid(logits)
    p_t = p * target + (1.0 - p) * (1.0 - target)
    alpha_t = alpha * target + (1.0 - alpha) * (1.0 - target)
    return (alpha_t * (1.0 - p_t) ** gamma * ce).mean()


def dice_loss(probs: Tensor, target: Tensor, eps: float = 1.0) -> Tensor:
    """1 - (2 sum(p t) + eps) / (sum(p) + sum(t) + eps)."""
    target = target.to(probs.dtype)
    intersection = (probs * target).sum()
    return 1.0 - (2.0 * intersection + eps) / (probs.sum() + target.sum() + eps)


def smooth_l1(pred: Tensor, gt: Tensor) -> Tensor:
    """Smooth L1 with unit transition, summed over components."""
    return F.smooth_l1_loss(pred, gt.to(pred.dtype), reduction="sum", beta=1.0)


def existence_bce(score: Tensor, present: bool) -> Tensor:
    """Binary cross-entropy of an existence probability."""
    score = score.clamp(SCORE_EPS, 1.0 - SCORE_EPS)
    return -torch.log(score) if present else -torch.log1p(-score)


def region_loss(logits: Tensor, target: Tensor, weights: LossSection) -> Tensor:
    """Focal + Dice on one map."""
    return (
        focal_loss(logits, target, weights.focal_alpha, weights.focal_gamma)
        + dice_loss(torch.sigmoid(logits), target, weights.dice_eps)
    )


def mask_objective(
    mask_logits: Tensor,
    edge_logits: Optional[Tensor],
    gt_mask: Tensor,
    gt_edge: Tensor,
    weights: LossSection,
) -> tuple[Tensor, dict[str, float]]:
    """
    L_m = w_region * (focal + dice)(mask) + w_edge * (focal + dice)(edge).

    The ground-truth edge map is max-pooled onto the edge logit grid. A
    missing edge map (edge generator ablated) drops the edge term.

    Returns:
        (L_m, the unweighted terms)
    """
    region = region_loss(mask_logits, gt_mask, weights)
    total = weights.region * region
    parts = {"region": float(region.detach())}

    if edge_logits is not None:
        target = gt_edge.to(edge_logits.dtype)
        if target.shape != edge_logits.shape:
            target = F.adaptive_max_pool2d(target[None, None], edge_logits.shape)[0, 0]
        edge = region_loss(edge_logits, target, weights)
        total = total + weights.edge * edge
        parts["edge"] = float(edge.detach())
    return total, parts


def point_objective(
    coord: Tensor,
    score: Tensor,
    gt_point: Optional[tuple[float, float]],
    weights: LossSection,
) -> tuple[Tensor, dict[str, float]]:
    """
    L_p = w_point * smooth_l1(coord, gt) + w_score * bce(score, present).

    Args:
        coord: predicted normalized (x, y)
        score: predicted existence probability
        gt_point: normalized ground-truth point or None

    Returns:
        (L_p, the unweighted terms); the coordinate term only when a GT point exists
    """
    present = gt_point is not None
    existence = existence_bce(score, present)
    total = weights.score * existence
    parts = {"score": float(existence.detach())}
    if present:
        coordinate = smooth_l1(coord, coord.new_tensor(gt_point))
        total = total + weights.point * coordinate
        parts["point"] = float(coordinate.detach())
    return total, parts
