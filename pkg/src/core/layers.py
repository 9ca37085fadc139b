"""Building blocks shared by the encoder, memory attention and decoders."""

import hashlib
import math
from typing import Optional

import torch
import torch.nn.functional as F
from torch import Tensor, nn


class LayerNorm2d(nn.Module):
    """LayerNorm over the channel axis of a (B, C, H, W) map."""

    def __init__(self, channels: int, eps: float = 1e-6):
        super().__init__()
        self.weight = nn.Parameter(torch.ones(channels))
        self.bias = nn.Parameter(torch.zeros(channels))
        self.eps = eps

    def forward(self, x: Tensor) -> Tensor:
        mean = x.mean(1, keepdim=True)
        var = (x - mean).pow(2).mean(1, keepdim=True)
        x = (x - mean) / torch.sqrt(var + self.eps)
        return self.weight[:, None, None] * x + self.bias[:, None, None]


class MLP(nn.Module):
    """Plain MLP with GELU between layers."""

    def __init__(self, in_dim: int, hidden_dim: int, out_dim: int, num_layers: int = 2):
        super().__init__()
        dims = [in_dim] + [hidden_dim] * (num_layers - 1) + [out_dim]
        self.layers = nn.ModuleList(nn.Linear(a, b) for a, b in zip(dims[:-1], dims[1:]))

    def forward(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = F.gelu(x)
        return x


class AttentionBlock(nn.Module):
    """
    Pre-norm self-attention, optional cross-attention and MLP.

    Inputs are batch-first (B, L, C). An empty or missing memory skips the
    cross-attention term entirely, so the block reduces to self-attention.
    """

    def __init__(self, dim: int, num_heads: int, mlp_ratio: int = 4):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.self_attn = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.cross_attn = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.norm3 = nn.LayerNorm(dim)
        self.mlp = MLP(dim, dim * mlp_ratio, dim)

    def forward(
        self,
        x: Tensor,
        pos: Optional[Tensor] = None,
        memory: Optional[Tensor] = None,
        memory_pos: Optional[Tensor] = None,
        need_weights: bool = False,
    ) -> tuple[Tensor, Optional[Tensor]]:
        h = self.norm1(x)
        q = h if pos is None else h + pos
        x = x + self.self_attn(q, q, h, need_weights=False)[0]

        weights = None
        if memory is not None and memory.shape[1] > 0:
            h = self.norm2(x)
            q = h if pos is None else h + pos
            k = memory if memory_pos is None else memory + memory_pos
            attended, weights = self.cross_attn(q, k, memory, need_weights=need_weights)
            x = x + attended

        x = x + self.mlp(self.norm3(x))
        return x, weights


def sine_positional_encoding_2d(height: int, width: int, dim: int, dtype=torch.float32) -> Tensor:
    """
    Fixed sinusoidal encoding of a (height, width) grid, shape (height*width, dim).

    Half the channels encode the row, half the column.
    """
    if dim % 4 != 0:
        raise ValueError(f"Positional encoding dim must be divisible by 4, got {dim}")
    quarter = dim // 4
    freqs = torch.exp(-math.log(10000.0) * torch.arange(quarter, dtype=torch.float64) / quarter)
    rows = torch.arange(height, dtype=torch.float64)[:, None] * freqs[None, :]
    cols = torch.arange(width, dtype=torch.float64)[:, None] * freqs[None, :]
    row_pe = torch.cat([rows.sin(), rows.cos()], dim=1)  # (H, dim/2)
    col_pe = torch.cat([cols.sin(), cols.cos()], dim=1)  # (W, dim/2)
    grid = torch.cat(
        [row_pe[:, None, :].expand(height, width, -1), col_pe[None, :, :].expand(height, width, -1)],
        dim=2,
    )
    return grid.reshape(height * width, dim).to(dtype)


def tokens_to_map(tokens: Tensor, grid: tuple[int, int]) -> Tensor:
    """(L, C) tokens to a (1, C, H, W) map."""
    height, width = grid
    return tokens.transpose(0, 1).reshape(1, -1, height, width)


def map_to_tokens(feature_map: Tensor) -> Tensor:
    """(1, C, H, W) map to (L, C) tokens."""
    return feature_map.flatten(2).squeeze(0).transpose(0, 1)


def parameter_hash(parameters) -> str:
    """SHA-256 over the raw bytes of a parameter iterable (order-sensitive)."""
    digest = hashlib.sha256()
    for param in parameters:
        digest.update(param.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()
