"""Base data models shared by the data, model and evaluation modules."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.errors import InputError

MIN_FRAME_SIZE = 16


@dataclass(frozen=True)
class ImageFrame:
    """One RGB video frame with intensities in [0, 1]."""
    pixels: np.ndarray  # H x W x 3, float
    frame_index: int
    clip_id: str

    def __post_init__(self):
        object.__setattr__(self, "pixels", np.array(self.pixels, dtype=np.float32))
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise InputError(f"Frame {self.frame_index} of '{self.clip_id}' must be HxWx3, got {self.pixels.shape}")
        height, width = self.pixels.shape[:2]
        if height < MIN_FRAME_SIZE or width < MIN_FRAME_SIZE:
            raise InputError(f"Frame {self.frame_index} of '{self.clip_id}' is smaller than {MIN_FRAME_SIZE}px")
        if self.frame_index < 0:
            raise InputError(f"Negative frame index {self.frame_index}")
        if not np.all(np.isfinite(self.pixels)):
            raise InputError(f"Frame {self.frame_index} of '{self.clip_id}' has non-finite pixels")
        if self.pixels.min() < 0.0 or self.pixels.max() > 1.0:
            raise InputError(f"Frame {self.frame_index} of '{self.clip_id}' has pixels outside [0, 1]")
        self.pixels.setflags(write=False)

    @property
    def size(self) -> tuple[int, int]:
        """(H, W) of the frame."""
        return self.pixels.shape[0], self.pixels.shape[1]

    def __repr__(self) -> str:
        height, width = self.size
        return f"ImageFrame({self.clip_id}#{self.frame_index}: {height}x{width})"


@dataclass(frozen=True)
class BleedAnnotation:
    """
    Ground truth for one frame.

    The point need not lie inside the mask: the bleeding source can be
    occluded by instruments while the pooled blood stays visible.
    """
    mask: Optional[np.ndarray] = None  # H x W bool
    point: Optional[tuple[float, float]] = None  # (x, y) pixels

    def __post_init__(self):
        if self.mask is not None:
            if self.mask.ndim != 2:
                raise InputError(f"Mask must be 2-D, got shape {self.mask.shape}")
            object.__setattr__(self, "mask", self.mask.astype(bool))
            self.mask.setflags(write=False)
        if self.point is not None:
            x, y = float(self.point[0]), float(self.point[1])
            if not (np.isfinite(x) and np.isfinite(y)):
                raise InputError(f"Non-finite point {self.point}")
            object.__setattr__(self, "point", (x, y))

    @property
    def has_region(self) -> bool:
        return self.mask is not None and bool(self.mask.any())

    @property
    def has_point(self) -> bool:
        return self.point is not None

    def check_bounds(self, size: tuple[int, int]) -> Optional[str]:
        """Return a problem description if the annotation does not fit a (H, W) frame."""
        height, width = size
        if self.mask is not None and self.mask.shape != (height, width):
            return f"mask is {self.mask.shape[0]}x{self.mask.shape[1]}, frame is {height}x{width}"
        if self.point is not None:
            x, y = self.point
            if not (0.0 <= x <= width - 1 and 0.0 <= y <= height - 1):
                return f"point ({x:.1f}, {y:.1f}) lies outside the {height}x{width} frame"
        return None

    def full_mask(self, size: tuple[int, int]) -> np.ndarray:
        """Mask as a bool array, all-false when absent."""
        if self.mask is None:
            return np.zeros(size, dtype=bool)
        return self.mask
