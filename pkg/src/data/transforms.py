"""Resizing frames and annotations to the model's square input resolution."""

from typing import Optional

import cv2
import numpy as np
import torch

from src.core.base import BleedAnnotation, ImageFrame
from src.data.base import Clip


def resize_frame(frame: ImageFrame, resolution: int) -> ImageFrame:
    if frame.size == (resolution, resolution):
        return frame
    pixels = cv2.resize(frame.pixels, (resolution, resolution), interpolation=cv2.INTER_AREA)
    return ImageFrame(pixels=np.clip(pixels, 0.0, 1.0), frame_index=frame.frame_index, clip_id=frame.clip_id)


def resize_mask(mask: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbour resize of a bool mask to (H, W)."""
    if mask.shape == tuple(size):
        return mask.astype(bool)
    resized = cv2.resize(mask.astype(np.uint8), (size[1], size[0]), interpolation=cv2.INTER_NEAREST)
    return resized.astype(bool)


def scale_point(
    point: Optional[tuple[float, float]], src: tuple[int, int], dst: tuple[int, int]
) -> Optional[tuple[float, float]]:
    if point is None:
        return None
    return point[0] * (dst[1] - 1) / (src[1] - 1), point[1] * (dst[0] - 1) / (src[0] - 1)


def resize_annotation(annotation: BleedAnnotation, src: tuple[int, int], resolution: int) -> BleedAnnotation:
    dst = (resolution, resolution)
    mask = resize_mask(annotation.mask, dst) if annotation.mask is not None else None
    return BleedAnnotation(mask=mask, point=scale_point(annotation.point, src, dst))


def frame_to_tensor(frame: ImageFrame, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """(3, H, W) tensor in [0, 1]."""
    return torch.from_numpy(np.ascontiguousarray(frame.pixels.transpose(2, 0, 1))).to(dtype)


def prepare_clip(clip: Clip, resolution: int) -> Clip:
    """The clip with every frame and annotation resized to resolution x resolution."""
    frames = tuple(
        (resize_frame(frame, resolution), resize_annotation(annotation, frame.size, resolution))
        for frame, annotation in clip.frames
    )
    return Clip(clip_id=clip.clip_id, frames=frames, fps_tag=clip.fps_tag)
