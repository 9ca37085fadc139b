"""Data models for clips and synthetic clip specifications."""

from dataclasses import dataclass
from typing import Optional

from src.core.base import BleedAnnotation, ImageFrame
from src.core.errors import ClipLoadError


@dataclass(frozen=True)
class Clip:
    """An annotated video clip: ordered (frame, annotation) pairs."""
    clip_id: str
    frames: tuple[tuple[ImageFrame, BleedAnnotation], ...]
    fps_tag: float = 2.0  # informational only

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        problem = self.problem()
        if problem:
            raise ClipLoadError(f"Clip '{self.clip_id}' is invalid: {problem}", clip_id=self.clip_id)

    def problem(self) -> Optional[str]:
        """Describe the first violated clip invariant, or None."""
        if not self.frames:
            return "no frames"
        size = self.frames[0][0].size
        first = self.frames[0][0].frame_index
        for offset, (frame, annotation) in enumerate(self.frames):
            if frame.frame_index != first + offset:
                return f"frame indices not contiguous at position {offset} (got {frame.frame_index})"
            if frame.clip_id != self.clip_id:
                return f"frame {frame.frame_index} belongs to clip '{frame.clip_id}'"
            if frame.size != size:
                return f"frame {frame.frame_index} is {frame.size}, expected {size}"
            issue = annotation.check_bounds(size)
            if issue:
                return f"frame {frame.frame_index}: {issue}"
        return None

    @property
    def size(self) -> tuple[int, int]:
        return self.frames[0][0].size

    @property
    def images(self) -> list[ImageFrame]:
        return [frame for frame, _ in self.frames]

    @property
    def annotations(self) -> list[BleedAnnotation]:
        return [annotation for _, annotation in self.frames]

    def __len__(self) -> int:
        return len(self.frames)

    def __repr__(self) -> str:
        height, width = self.size
        return f"Clip({self.clip_id}: {len(self)} frames @ {height}x{width})"


@dataclass(frozen=True)
class SynthSpec:
    """
    Recipe for a synthetic clip with known camera motion.

    camera_path[t] is the displacement (dx, dy) of the scene between frame
    t-1 and frame t; camera_path[0] is ignored.
    """
    n_frames: int
    image_size: tuple[int, int]  # (H, W)
    camera_path: tuple[tuple[float, float], ...]
    bleed_onset: int
    source_point_path: tuple[tuple[float, float], ...]
    region_growth_rate: float = 1.5  # px per frame
    texture_seed: int = 0
    clip_id: str = "synth"
    fps_tag: float = 2.0

    def validate(self) -> list[str]:
        errors = []
        height, width = self.image_size
        limit = 0.05 * min(height, width)
        if self.n_frames < 1:
            errors.append("n_frames must be >= 1")
        if height < 16 or width < 16:
            errors.append("image_size must be at least 16x16")
        if len(self.camera_path) != self.n_frames:
            errors.append(f"camera_path has {len(self.camera_path)} steps for {self.n_frames} frames")
        if len(self.source_point_path) != self.n_frames:
            errors.append(f"source_point_path has {len(self.source_point_path)} points for {self.n_frames} frames")
        for t, (dx, dy) in enumerate(self.camera_path):
            if abs(dx) > limit or abs(dy) > limit:
                errors.append(f"camera step {t} ({dx:.2f}, {dy:.2f}) exceeds {limit:.2f}px")
                break
        if not 0 <= self.bleed_onset < self.n_frames:
            errors.append(f"bleed_onset {self.bleed_onset} outside [0, {self.n_frames})")
        if self.region_growth_rate < 0:
            errors.append("region_growth_rate must be >= 0")
        return errors
