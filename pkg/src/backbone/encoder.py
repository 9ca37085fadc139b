"""Hierarchical per-frame image encoder (strides 4 / 8 / 16)."""

from dataclasses import dataclass

import torch
from torch import Tensor, nn

from src.config import ModelConfig
from src.core.base import ImageFrame
from src.core.errors import InputError
from src.core.layers import AttentionBlock, LayerNorm2d, sine_positional_encoding_2d
from src.data.transforms import frame_to_tensor

PIXEL_MEAN = 0.5
PIXEL_STD = 0.25


@dataclass
class FeaturePyramid:
    """
    Multi-scale features of one frame.

    tokens is the coarse stride-16 sequence F with shape (s, c); f2 and f1
    are channel-first maps at strides 8 and 4.
    """
    tokens: Tensor  # (s, c)
    f2: Tensor  # (c2, H/8, W/8)
    f1: Tensor  # (c1, H/4, W/4)
    grid: tuple[int, int]  # coarse (H/16, W/16)
    frame_index: int

    @property
    def channels(self) -> int:
        return self.tokens.shape[1]


def _conv_stage(in_ch: int, out_ch: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_ch, out_ch, 3, stride=2, padding=1),
        LayerNorm2d(out_ch),
        nn.GELU(),
        nn.Conv2d(out_ch, out_ch, 3, padding=1),
        LayerNorm2d(out_ch),
        nn.GELU(),
    )


class HybridEncoder(nn.Module):
    """
    Small convolution + attention encoder.

    Two strided conv stages reach stride 4 (F1), a third stride 8 (F2) and
    a fourth stride 16, where self-attention blocks mix the coarse tokens.
    Frames are encoded independently.
    """

    def __init__(self, channels: int, channels_f1: int, channels_f2: int, num_heads: int, depth: int):
        super().__init__()
        stem = max(channels_f1 // 2, 4)
        self.stem = nn.Sequential(_conv_stage(3, stem), _conv_stage(stem, channels_f1))
        self.stage2 = _conv_stage(channels_f1, channels_f2)
        self.stage3 = _conv_stage(channels_f2, channels)
        self.blocks = nn.ModuleList(AttentionBlock(channels, num_heads) for _ in range(depth))
        self.norm = nn.LayerNorm(channels)
        self.channels = channels

    @classmethod
    def from_config(cls, config: ModelConfig) -> "HybridEncoder":
        m = config.model
        return cls(m.channels, m.channels_f1, m.channels_f2, m.num_heads, m.encoder_depth)

    def forward(self, images: Tensor, frame_indices: list[int]) -> list[FeaturePyramid]:
        """images: (B, 3, H, W) in [0, 1], H and W divisible by 16."""
        if not torch.isfinite(images).all():
            raise InputError("Encoder input contains non-finite pixels")
        if images.shape[-1] % 16 or images.shape[-2] % 16:
            raise InputError(f"Encoder input {tuple(images.shape[-2:])} is not divisible by 16")

        x = (images - PIXEL_MEAN) / PIXEL_STD
        f1 = self.stem(x)
        f2 = self.stage2(f1)
        coarse = self.stage3(f2)
        batch, channels, height, width = coarse.shape

        pos = sine_positional_encoding_2d(height, width, channels, dtype=coarse.dtype).to(coarse.device)
        tokens = coarse.flatten(2).transpose(1, 2) + pos.unsqueeze(0)
        for block in self.blocks:
            tokens, _ = block(tokens, pos=pos.unsqueeze(0))
        tokens = self.norm(tokens)

        return [
            FeaturePyramid(tokens=tokens[b], f2=f2[b], f1=f1[b], grid=(height, width), frame_index=frame_indices[b])
            for b in range(batch)
        ]


def encode_window(encoder: HybridEncoder, frames: list[ImageFrame], config: ModelConfig) -> list[FeaturePyramid]:
    """Encode a window of frames already resized to the input resolution."""
    if len(frames) > config.window_size:
        raise InputError(f"Window has {len(frames)} frames, more than N={config.window_size}")
    resolution = config.model.input_resolution
    for frame in frames:
        if frame.size != (resolution, resolution):
            raise InputError(f"{frame!r} is not resized to {resolution}x{resolution}")
    dtype = next(encoder.parameters()).dtype
    device = next(encoder.parameters()).device
    images = torch.stack([frame_to_tensor(frame, dtype) for frame in frames]).to(device)
    return encoder(images, [frame.frame_index for frame in frames])
