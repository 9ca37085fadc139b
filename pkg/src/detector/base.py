"""Per-frame detector outputs."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from src.maskbranch.branch import MaskOutput
from src.pointbranch.base import FlowField, Offset, PointPrediction
from src.pointbranch.branch import PointOutput


@dataclass
class FrameOutput:
    """Everything the detector produced for one frame."""
    frame_index: int
    mask: MaskOutput
    point: PointOutput
    offset: Offset
    flow: Optional[FlowField] = None  # None on the first frame of a stream

    def binary_mask(self) -> np.ndarray:
        """Predicted H x W bool mask at input resolution."""
        return self.mask.mask.detach().cpu().numpy()

    def prediction(self) -> PointPrediction:
        return self.point.prediction()

    def __repr__(self) -> str:
        p = self.prediction()
        return (
            f"FrameOutput(#{self.frame_index}: area={int(self.binary_mask().sum())}, "
            f"point=({p.coord[0]:.3f}, {p.coord[1]:.3f}), score={p.score:.3f})"
        )
