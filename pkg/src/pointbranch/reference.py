"""Mask-guided reference features for point memory attention."""

from typing import Optional

import torch
from torch import Tensor, nn

from src.core.errors import InputError
from src.core.layers import MLP, sine_positional_encoding_2d
from src.maskbranch.memory import MaskMemoryBank, MemoryAttention, TemporalEmbedding
from src.pointbranch.memory import PointMemoryBank


class OffsetEmbedding(nn.Module):
    """MLP lifting a viewpoint offset (divided by the input resolution) to c channels."""

    def __init__(self, channels: int, resolution: int):
        super().__init__()
        self.resolution = float(resolution)
        self.mlp = MLP(2, channels, channels, num_layers=2)

    def forward(self, dx: float, dy: float, like: Tensor) -> Tensor:
        offset = like.new_tensor([dx, dy]) / self.resolution
        return self.mlp(offset)


def build_reference_features(
    point_bank: PointMemoryBank,
    mask_bank: MaskMemoryBank,
    offset_embedding: OffsetEmbedding,
    temporal: TemporalEmbedding,
    grid: tuple[int, int],
    frame_index: int,
    use_mask_memory: bool = True,
) -> tuple[Tensor, Tensor]:
    """
    Concatenate, per stored frame, M^p_i + MLP(offset_i) and M^m_i.

    Frames are taken from the point bank; a frame missing from the mask bank
    contributes point tokens only.

    Returns:
        (reference tokens, their positional encodings), both (L, c); L is 0
        for an empty point bank
    """
    entries = point_bank.entries
    if not entries:
        empty = torch.zeros(0, offset_embedding.mlp.layers[-1].out_features)
        return empty, empty

    channels = entries[0].memory.shape[1]
    first = entries[0].memory
    pos = sine_positional_encoding_2d(grid[0], grid[1], channels, dtype=first.dtype).to(first.device)

    tokens = []
    positions = []
    for entry in entries:
        if entry.memory.shape[0] != grid[0] * grid[1]:
            raise InputError(f"Point memory of frame {entry.frame_index} does not match the {grid} grid")
        when = temporal(frame_index - entry.frame_index)
        shift = offset_embedding(entry.offset.dx, entry.offset.dy, entry.memory)
        tokens.append(entry.memory + shift + when)
        positions.append(pos)

        mask_entry = mask_bank.get(entry.frame_index) if use_mask_memory else None
        if mask_entry is not None:
            tokens.append(mask_entry.memory + when)
            positions.append(pos)

    return torch.cat(tokens, dim=0), torch.cat(positions, dim=0)


def attend_point_memory(
    attention: MemoryAttention,
    tokens: Tensor,
    grid: tuple[int, int],
    reference: Optional[Tensor],
    reference_pos: Optional[Tensor],
) -> Tensor:
    """F_point: self-attention on the frame's tokens, cross-attention to the reference."""
    if reference is None or reference.shape[0] == 0:
        reference = tokens.new_zeros(0, tokens.shape[1])
        reference_pos = reference
    return attention(tokens, grid, reference.to(tokens.dtype), reference_pos.to(tokens.dtype))
