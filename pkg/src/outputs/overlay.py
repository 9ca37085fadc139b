"""Overlay PNGs: predicted and GT contours and points over the frame."""

from pathlib import Path
from typing import Optional

import cv2
import numpy as np
import structlog

from .base import BaseWriter, FramePayload

log = structlog.get_logger()

# RGB
PRED_COLOR = (0, 255, 0)
GT_COLOR = (255, 255, 0)
PRED_POINT_COLOR = (255, 0, 0)
GT_POINT_COLOR = (0, 255, 255)


def render_overlay(
    image: np.ndarray,
    mask: np.ndarray,
    point: Optional[tuple[float, float]],
    gt_mask: Optional[np.ndarray] = None,
    gt_point: Optional[tuple[float, float]] = None,
) -> np.ndarray:
    """uint8 RGB overlay."""
    canvas = np.ascontiguousarray(np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8))
    radius = max(2, min(canvas.shape[:2]) // 64)
    if gt_mask is not None and gt_mask.any():
        _draw_contours(canvas, gt_mask, GT_COLOR)
    if mask.any():
        _draw_contours(canvas, mask, PRED_COLOR)
    if gt_point is not None:
        cv2.circle(canvas, _pixel(gt_point), radius + 1, GT_POINT_COLOR, 1, lineType=cv2.LINE_AA)
    if point is not None:
        cv2.circle(canvas, _pixel(point), radius, PRED_POINT_COLOR, -1, lineType=cv2.LINE_AA)
    return canvas


class OverlayWriter(BaseWriter):
    """Writes <out>/<clip>/<frame>_pred.png."""

    def write(self, payload: FramePayload) -> bool:
        gt = payload.gt
        canvas = render_overlay(
            payload.image,
            payload.mask,
            payload.point,
            gt_mask=gt.full_mask(payload.size) if gt is not None else None,
            gt_point=gt.point if gt is not None else None,
        )
        return write_rgb(self.out_dir / payload.clip_id / f"{payload.frame_index:06d}_pred.png", canvas)


def write_rgb(path: Path, rgb: np.ndarray) -> bool:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        log.error("Cannot create overlay directory", path=str(path.parent), error=str(e))
        return False
    ok = cv2.imwrite(str(path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
    if not ok:
        log.error("Image write failed", path=str(path))
    return bool(ok)


def _draw_contours(canvas: np.ndarray, mask: np.ndarray, color: tuple[int, int, int]) -> None:
    contours, _ = cv2.findContours(mask.astype(np.uint8), cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_SIMPLE)
    cv2.drawContours(canvas, contours, -1, color, 1, lineType=cv2.LINE_AA)


def _pixel(point: tuple[float, float]) -> tuple[int, int]:
    return int(round(point[0])), int(round(point[1]))
