"""Point memory bank and point memory encoding."""

from dataclasses import dataclass

import torch
from torch import Tensor, nn

from src.core.memory import MemoryBank
from src.pointbranch.base import Offset


@dataclass
class PointMemoryEntry:
    memory: Tensor  # M^p, (s, c)
    offset: Offset  # viewpoint offset between frame_index-1 and frame_index, pixels
    frame_index: int


class PointMemoryBank(MemoryBank[PointMemoryEntry]):
    """FIFO of point memories with their viewpoint offsets."""


def point_heatmap(coord: Tensor, score: Tensor, grid: tuple[int, int]) -> Tensor:
    """Score-weighted Gaussian (one cell wide) at a normalized coordinate, shape (h*w,)."""
    height, width = grid
    ys = (torch.arange(height, dtype=coord.dtype, device=coord.device) + 0.5) / height
    xs = (torch.arange(width, dtype=coord.dtype, device=coord.device) + 0.5) / width
    dist_x = (xs[None, :] - coord[0]) * width
    dist_y = (ys[:, None] - coord[1]) * height
    heat = torch.exp(-0.5 * (dist_x ** 2 + dist_y ** 2))
    return (heat * score).reshape(-1)


class PointMemoryEncoder(nn.Module):
    """M^p_k: projected point features plus an embedding of the predicted point heatmap."""

    def __init__(self, channels: int):
        super().__init__()
        self.proj = nn.Linear(channels, channels)
        self.heat_embed = nn.Linear(1, channels)

    def forward(self, features: Tensor, grid: tuple[int, int], coord: Tensor, score: Tensor) -> Tensor:
        heat = point_heatmap(coord, score, grid)
        return self.proj(features) + self.heat_embed(heat[:, None])


def point_bank_push(bank: PointMemoryBank, entry: PointMemoryEntry) -> PointMemoryBank:
    """Append an entry, evicting the oldest beyond capacity."""
    bank.push(entry)
    return bank
