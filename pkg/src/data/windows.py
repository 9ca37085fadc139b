"""Sliding-window sampling over clips for online training."""

from dataclasses import dataclass
from typing import Iterator

from src.core.base import BleedAnnotation, ImageFrame
from src.data.base import Clip


@dataclass(frozen=True)
class Window:
    """Frames [end - len + 1 .. end] of a clip."""
    clip_id: str
    end: int  # position of the last frame within the clip
    window_size: int
    frames: tuple[tuple[ImageFrame, BleedAnnotation], ...]

    @property
    def is_warmup(self) -> bool:
        """Left-truncated window near the clip start."""
        return len(self.frames) < self.window_size

    def __len__(self) -> int:
        return len(self.frames)


def window_sampler(clip: Clip, window_size: int) -> Iterator[Window]:
    """
    Yield one window ending at every frame of the clip.

    Positions k < N-1 yield left-truncated warm-up windows of length k+1, so
    the online detector is trained to predict from the first frame on.
    """
    if window_size < 2:
        raise ValueError(f"Window size must be >= 2, got {window_size}")
    for end in range(len(clip.frames)):
        start = max(0, end - window_size + 1)
        yield Window(
            clip_id=clip.clip_id,
            end=end,
            window_size=window_size,
            frames=clip.frames[start:end + 1],
        )
