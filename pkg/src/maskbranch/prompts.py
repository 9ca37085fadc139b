"""Adaptive prompt encoding: dense edge prompt E_p and sparse point prompt P_p."""

import math
from typing import Optional

import torch
from torch import Tensor, nn

from src.core.layers import LayerNorm2d


class FourierPositionEncoding(nn.Module):
    """Random Fourier features of normalized coordinates: [sin(2pi xB), cos(2pi xB)]."""

    def __init__(self, channels: int, scale: float = 1.0):
        super().__init__()
        gaussian = torch.randn(2, channels // 2) * scale
        self.register_buffer("gaussian", gaussian)

    def forward(self, coords: Tensor) -> Tensor:
        """coords: (..., 2) in [0, 1] -> (..., channels)."""
        projected = 2.0 * math.pi * (coords.to(self.gaussian.dtype) @ self.gaussian)
        return torch.cat([projected.sin(), projected.cos()], dim=-1)

    def grid(self, height: int, width: int) -> Tensor:
        """Encoding of cell centres of an (height, width) grid, shape (height*width, channels)."""
        dtype = self.gaussian.dtype
        ys = (torch.arange(height, dtype=dtype, device=self.gaussian.device) + 0.5) / height
        xs = (torch.arange(width, dtype=dtype, device=self.gaussian.device) + 0.5) / width
        coords = torch.stack(torch.meshgrid(xs, ys, indexing="xy"), dim=-1)
        return self(coords).reshape(height * width, -1)


class PromptEncoder(nn.Module):
    """
    E_p = Conv(LN(GELU(Conv(LN(GELU(Conv(E_m))))))) with two 2x2 stride-2
    convolutions, landing a stride-4 edge map on the stride-16 grid.

    P_p = [sin(2pi Po(p)), cos(2pi Po(p))] + learned point embedding, or a
    learned no-point token when the point branch declares no point.
    """

    def __init__(self, channels: int):
        super().__init__()
        quarter = max(channels // 4, 1)
        half = max(channels // 2, 1)
        self.edge_conv1 = nn.Conv2d(1, quarter, kernel_size=2, stride=2)
        self.edge_norm1 = LayerNorm2d(quarter)
        self.edge_conv2 = nn.Conv2d(quarter, half, kernel_size=2, stride=2)
        self.edge_norm2 = LayerNorm2d(half)
        self.edge_conv3 = nn.Conv2d(half, channels, kernel_size=1)
        self.act = nn.GELU()

        self.pe = FourierPositionEncoding(channels)
        self.point_embed = nn.Parameter(torch.randn(channels) * 0.02)
        self.no_point_embed = nn.Parameter(torch.randn(channels) * 0.02)
        self.no_edge_embed = nn.Parameter(torch.zeros(channels))

    def encode_edges(self, edge_logits: Optional[Tensor], grid: tuple[int, int]) -> Tensor:
        """(4h, 4w) edge map -> (c, h, w) dense prompt."""
        if edge_logits is None:
            return self.no_edge_embed[:, None, None].expand(-1, grid[0], grid[1])
        x = edge_logits[None, None]
        x = self.edge_norm1(self.act(self.edge_conv1(x)))
        x = self.edge_norm2(self.act(self.edge_conv2(x)))
        return self.edge_conv3(x)[0]

    def encode_point(self, point: Optional[Tensor]) -> Tensor:
        """Normalized (x, y) or None -> (1, c) sparse prompt token."""
        if point is None:
            return self.no_point_embed[None]
        return (self.pe(point.reshape(1, 2)) + self.point_embed[None])

    def forward(
        self, edge_logits: Optional[Tensor], point: Optional[Tensor], grid: tuple[int, int]
    ) -> tuple[Tensor, Tensor]:
        return self.encode_edges(edge_logits, grid), self.encode_point(point)

    def dense_pe(self, grid: tuple[int, int]) -> Tensor:
        return self.pe.grid(*grid)


def encode_prompts(
    encoder: PromptEncoder,
    edge_logits: Optional[Tensor],
    point: Optional[Tensor],
    score: Optional[Tensor],
    grid: tuple[int, int],
    existence_threshold: float = 0.5,
) -> tuple[Tensor, Tensor]:
    """
    Prompt features from the edge generator and point branch outputs.

    A point whose existence score is below the threshold counts as absent.
    Point-branch outputs enter as constants.
    """
    if point is not None and score is not None and float(score) < existence_threshold:
        point = None
    if point is not None:
        point = point.detach()
    return encoder(edge_logits, point, grid)
