"""Global viewpoint offset from a dense flow field and a bleed mask."""

import numpy as np

from src.config import OFFSET_NORMALIZATIONS, OFFSET_REGIONS
from src.core.errors import InputError
from src.pointbranch.base import FlowField, Offset


def mean_background_offset(
    flow: FlowField,
    mask: np.ndarray,
    mode: str = "paper_hw",
    region: str = "background",
) -> Offset:
    """
    Masked mean of a flow field.

    Args:
        flow: displacement from frame i-1 to frame i
        mask: H x W binary bleed mask of frame i
        mode: "paper_hw" divides the masked sum by H*W; "background_count"
            divides by the number of weighted pixels (zero offset if none)
        region: which pixels are averaged: "background" (1 - M),
            "foreground" (M) or "global" (all)

    Returns:
        Offset for frame i, in pixels
    """
    if mode not in OFFSET_NORMALIZATIONS:
        raise InputError(f"Unknown offset normalization '{mode}'")
    if region not in OFFSET_REGIONS:
        raise InputError(f"Unknown offset region '{region}'")
    if mask.shape != flow.size:
        raise InputError(f"Mask {mask.shape} does not match flow {flow.size}")

    bleed = mask.astype(np.float64)
    if region == "background":
        weights = 1.0 - bleed
    elif region == "foreground":
        weights = bleed
    else:
        weights = np.ones_like(bleed)

    total = np.einsum("hw,hwc->c", weights, flow.vectors.astype(np.float64))
    if mode == "paper_hw":
        dx, dy = total / weights.size
    else:
        count = weights.sum()
        dx, dy = total / count if count > 0 else (0.0, 0.0)
    return Offset(dx=float(dx), dy=float(dy), frame_index=flow.pair[1])


def zero_offset(frame_index: int) -> Offset:
    """Offset of the first frame of a stream, which has no predecessor."""
    return Offset(dx=0.0, dy=0.0, frame_index=frame_index)
