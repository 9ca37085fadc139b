"""Per-clip streaming state: both memory banks and the previous frame."""

from typing import Optional

from src.config import ModelConfig
from src.core.base import ImageFrame
from src.maskbranch.memory import MaskMemoryBank
from src.pointbranch.memory import PointMemoryBank


class StreamState:
    """
    State owned by one clip stream.

    Banks hold the N-1 frames preceding the current one. One owner processes
    the stream sequentially; independent streams may run concurrently.
    """

    def __init__(self, config: ModelConfig, clip_id: Optional[str] = None):
        self.mask_bank = MaskMemoryBank(config.memory_capacity)
        self.point_bank = PointMemoryBank(config.memory_capacity)
        self.previous: Optional[ImageFrame] = None
        self.clip_id = clip_id
        self.frames_seen = 0

    def reset(self, clip_id: Optional[str] = None) -> "StreamState":
        self.mask_bank.reset()
        self.point_bank.reset()
        self.previous = None
        self.clip_id = clip_id
        self.frames_seen = 0
        return self

    def __repr__(self) -> str:
        return (
            f"StreamState(clip={self.clip_id}, seen={self.frames_seen}, "
            f"mask={self.mask_bank.frame_indices}, point={self.point_bank.frame_indices})"
        )
