"""
Online dual-branch bleeding detector.

Per frame: encode, predict the point from past memories, segment with the
point and edge prompts, estimate the viewpoint offset, then write both
memories. Only past frames inform the current prediction.
"""

from typing import Iterator, Optional

import numpy as np
import structlog
import torch
from torch import nn

from src.backbone.encoder import HybridEncoder, encode_window
from src.config import ModelConfig
from src.core.base import ImageFrame
from src.core.errors import InputError
from src.core.rng import SeededStream, torch_seed
from src.detector.base import FrameOutput
from src.detector.stream import StreamState
from src.maskbranch.branch import MaskBranch, bank_push
from src.pointbranch.flow import FlowBackend, estimate_flow
from src.pointbranch.memory import point_bank_push
from src.pointbranch.offset import mean_background_offset, zero_offset
from src.pointbranch.branch import PointBranch

log = structlog.get_logger()


class OnlineDetector(nn.Module):
    """
    Encoder plus mask and point branches.

    Parameters split into two optimization partitions: theta (encoder and
    mask branch) and vartheta (point branch).
    """

    def __init__(self, config: ModelConfig, flow_backend: FlowBackend):
        super().__init__()
        self.config = config
        self.backbone = HybridEncoder.from_config(config)
        self.maskbranch = MaskBranch(config)
        self.pointbranch = PointBranch(config)
        self.flow_backend = flow_backend

    def theta_parameters(self) -> Iterator[nn.Parameter]:
        yield from self.backbone.parameters()
        yield from self.maskbranch.parameters()

    def vartheta_parameters(self) -> Iterator[nn.Parameter]:
        yield from self.pointbranch.parameters()

    def step(
        self,
        frame: ImageFrame,
        state: StreamState,
        offset_mask: Optional[np.ndarray] = None,
        mask_grad: Optional[bool] = None,
        point_grad: Optional[bool] = None,
    ) -> FrameOutput:
        """
        Process the next frame of a stream and update its banks.

        Args:
            frame: frame at the model input resolution
            state: the stream's banks; reset before the first frame of a clip
            offset_mask: mask used for the viewpoint offset instead of the
                prediction (ground truth during teacher forcing)
            mask_grad: track gradients through encoder and mask branch
            point_grad: track gradients through the point branch

        Returns:
            FrameOutput for the frame
        """
        grad = torch.is_grad_enabled()
        mask_grad = grad if mask_grad is None else mask_grad
        point_grad = grad if point_grad is None else point_grad
        self._check_frame(frame, state)

        with torch.set_grad_enabled(mask_grad):
            pyramid = encode_window(self.backbone, [frame], self.config)[0]

        with torch.set_grad_enabled(point_grad):
            point = self.pointbranch(pyramid, state.point_bank, state.mask_bank)

        with torch.set_grad_enabled(mask_grad):
            mask = self.maskbranch(
                pyramid, state.mask_bank, point.coord.detach(), point.score.detach(), output_size=frame.size
            )

        flow = None
        if state.previous is None:
            offset = zero_offset(frame.frame_index)
        else:
            flow = estimate_flow(state.previous, frame, self.flow_backend)
            region = offset_mask if offset_mask is not None else mask.mask.detach().cpu().numpy()
            offset = mean_background_offset(
                flow, region, mode=self.config.flow.offset_normalization, region=self.config.flow.offset_region
            )

        with torch.set_grad_enabled(mask_grad):
            bank_push(state.mask_bank, self.maskbranch.encode_memory(pyramid, mask.mask))
        with torch.set_grad_enabled(point_grad):
            point_bank_push(state.point_bank, self.pointbranch.encode_memory(point, pyramid.grid, offset))

        state.previous = frame
        state.frames_seen += 1
        return FrameOutput(frame_index=frame.frame_index, mask=mask, point=point, offset=offset, flow=flow)

    def _check_frame(self, frame: ImageFrame, state: StreamState) -> None:
        resolution = self.config.model.input_resolution
        if frame.size != (resolution, resolution):
            raise InputError(f"{frame!r} is not resized to {resolution}x{resolution}")
        if state.clip_id is None:
            state.clip_id = frame.clip_id
        elif frame.clip_id != state.clip_id:
            raise InputError(f"Stream of clip '{state.clip_id}' received a frame of '{frame.clip_id}'; reset it first")
        if state.previous is not None and frame.frame_index <= state.previous.frame_index:
            raise InputError(f"Frame {frame.frame_index} arrived after frame {state.previous.frame_index}")


def build_detector(config: ModelConfig, rng: SeededStream, flow_backend: FlowBackend) -> OnlineDetector:
    """Construct a detector with weights drawn from the run's model stream."""
    with torch_seed(rng.split("model")):
        detector = OnlineDetector(config, flow_backend)
    n_theta = sum(p.numel() for p in detector.theta_parameters())
    n_vartheta = sum(p.numel() for p in detector.vartheta_parameters())
    log.info("Detector built", theta_params=n_theta, vartheta_params=n_vartheta, flow=flow_backend.name)
    return detector
