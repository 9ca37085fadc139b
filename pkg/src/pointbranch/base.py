"""Data models for the point branch."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.core.errors import InputError


@dataclass(frozen=True)
class FlowField:
    """Dense displacement (dx, dy) in pixels from frame pair[0] to frame pair[1]."""
    vectors: np.ndarray  # H x W x 2
    pair: tuple[int, int]

    def __post_init__(self):
        if self.vectors.ndim != 3 or self.vectors.shape[2] != 2:
            raise InputError(f"Flow must be HxWx2, got {self.vectors.shape}")
        if not np.all(np.isfinite(self.vectors)):
            raise InputError(f"Flow for pair {self.pair} has non-finite vectors")

    @property
    def size(self) -> tuple[int, int]:
        return self.vectors.shape[0], self.vectors.shape[1]

    @classmethod
    def uniform(cls, size: tuple[int, int], dx: float, dy: float, pair: tuple[int, int]) -> "FlowField":
        vectors = np.empty((size[0], size[1], 2), dtype=np.float64)
        vectors[..., 0] = dx
        vectors[..., 1] = dy
        return cls(vectors=vectors, pair=pair)


@dataclass(frozen=True)
class Offset:
    """Global viewpoint offset between frame_index-1 and frame_index."""
    dx: float
    dy: float
    frame_index: int

    def __post_init__(self):
        if not (np.isfinite(self.dx) and np.isfinite(self.dy)):
            raise InputError(f"Non-finite offset at frame {self.frame_index}")

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy], dtype=np.float64)


@dataclass(frozen=True)
class PointPrediction:
    """Bleeding point output for one frame, coordinates normalized to [0, 1]^2."""
    coord: tuple[float, float]
    score: float
    frame_index: int

    def present(self, threshold: float) -> bool:
        return self.score >= threshold

    def to_pixels(self, size: tuple[int, int]) -> tuple[float, float]:
        """(x, y) in pixel coordinates of an (H, W) frame."""
        height, width = size
        return self.coord[0] * (width - 1), self.coord[1] * (height - 1)

    def as_point(self, size: tuple[int, int], threshold: float) -> Optional[tuple[float, float]]:
        return self.to_pixels(size) if self.present(threshold) else None


def normalize_point(point: tuple[float, float], size: tuple[int, int]) -> tuple[float, float]:
    """Pixel (x, y) to [0, 1]^2, inverse of PointPrediction.to_pixels."""
    height, width = size
    return point[0] / (width - 1), point[1] / (height - 1)
