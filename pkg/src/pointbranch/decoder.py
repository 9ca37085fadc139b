"""Token-based point decoder."""

import torch
from torch import Tensor, nn

from src.core.layers import MLP, AttentionBlock, sine_positional_encoding_2d
from src.pointbranch.base import PointPrediction


class PointDecoder(nn.Module):
    """
    A learnable output token and a prompt token attend over F_point; MLP
    heads map the output token to a sigmoid coordinate in [0, 1]^2 and a
    sigmoid existence score.
    """

    def __init__(self, channels: int, num_heads: int, depth: int):
        super().__init__()
        self.output_token = nn.Parameter(torch.randn(1, channels) * 0.02)
        self.prompt_token = nn.Parameter(torch.randn(1, channels) * 0.02)
        self.blocks = nn.ModuleList(AttentionBlock(channels, num_heads) for _ in range(depth))
        self.norm = nn.LayerNorm(channels)
        self.coord_head = MLP(channels, channels, 2, num_layers=3)
        self.score_head = MLP(channels, channels, 1, num_layers=2)

    def forward(self, features: Tensor, grid: tuple[int, int]) -> tuple[Tensor, Tensor, Tensor]:
        """
        Args:
            features: F_point, (s, c)

        Returns:
            (coord (2,), score (), attention of the output token over the grid (h, w))
        """
        pos = sine_positional_encoding_2d(grid[0], grid[1], features.shape[1], dtype=features.dtype)
        pos = pos.to(features.device).unsqueeze(0)
        memory = features.unsqueeze(0)
        x = torch.cat([self.output_token, self.prompt_token], dim=0).unsqueeze(0)

        weights = None
        for i, block in enumerate(self.blocks):
            last = i == len(self.blocks) - 1
            x, weights = block(x, memory=memory, memory_pos=pos, need_weights=last)
        token = self.norm(x[0, 0])

        coord = torch.sigmoid(self.coord_head(token))
        score = torch.sigmoid(self.score_head(token))[0]
        if weights is None:
            attention = features.new_zeros(grid)
        else:
            attention = weights[0, 0].reshape(grid)
        return coord, score, attention


def decode_point(decoder: PointDecoder, features: Tensor, grid: tuple[int, int], frame_index: int) -> PointPrediction:
    """Decode and detach into a PointPrediction."""
    coord, score, _ = decoder(features, grid)
    x, y = coord.detach().cpu().tolist()
    return PointPrediction(coord=(x, y), score=float(score.detach()), frame_index=frame_index)
