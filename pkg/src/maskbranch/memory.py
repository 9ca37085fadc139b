"""Mask memory bank, memory encoding and memory attention."""

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from src.core.errors import InputError
from src.core.layers import AttentionBlock, map_to_tokens, sine_positional_encoding_2d, tokens_to_map
from src.core.memory import MemoryBank


@dataclass
class MaskMemoryEntry:
    memory: Tensor  # M^m, (s, c)
    mask: Tensor  # predicted binary mask M_i at input resolution, bool (H, W)
    frame_index: int


class MaskMemoryBank(MemoryBank[MaskMemoryEntry]):
    """FIFO of mask memories plus the binary masks the viewpoint offset needs."""


class TemporalEmbedding(nn.Module):
    """Learned embedding of the distance (in frames) between a memory and the current frame."""

    def __init__(self, capacity: int, channels: int, enabled: bool = True):
        super().__init__()
        self.capacity = capacity
        self.enabled = enabled
        self.table = nn.Embedding(capacity + 1, channels)
        nn.init.normal_(self.table.weight, std=0.02)

    def forward(self, distance: int) -> Tensor:
        if not self.enabled:
            return self.table.weight.new_zeros(self.table.embedding_dim)
        index = min(max(distance, 1), self.capacity)
        return self.table.weight[index]


class MaskMemoryEncoder(nn.Module):
    """M^m_k: coarse features fused with the binary mask pooled to stride 16."""

    def __init__(self, channels: int):
        super().__init__()
        self.mask_proj = nn.Conv2d(1, channels, 1)
        self.fuse = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.GELU(),
            nn.Conv2d(channels, channels, 1),
        )

    def forward(self, tokens: Tensor, grid: tuple[int, int], mask: Tensor) -> Tensor:
        pooled = F.adaptive_avg_pool2d(mask.to(tokens.dtype)[None, None], grid)
        x = tokens_to_map(tokens, grid) + self.mask_proj(pooled)
        return map_to_tokens(self.fuse(x))


def stack_memories(memories: list[Tensor], embeddings: list[Tensor], tokens: Tensor) -> Tensor:
    """Concatenate per-frame memories (each plus its embedding) along the token axis."""
    if not memories:
        return tokens.new_zeros(0, tokens.shape[1])
    parts = []
    for memory, embedding in zip(memories, embeddings):
        if memory.shape[1] != tokens.shape[1]:
            raise InputError(f"Memory width {memory.shape[1]} does not match feature width {tokens.shape[1]}")
        parts.append(memory + embedding)
    return torch.cat(parts, dim=0)


class MemoryAttention(nn.Module):
    """
    Self-attention over the current frame's tokens and cross-attention to a
    memory sequence. An empty memory leaves only the self-attention terms.
    """

    def __init__(self, channels: int, num_heads: int, depth: int):
        super().__init__()
        self.layers = nn.ModuleList(AttentionBlock(channels, num_heads) for _ in range(depth))
        self.norm = nn.LayerNorm(channels)

    def forward(self, tokens: Tensor, grid: tuple[int, int], memory: Tensor, memory_pos: Tensor) -> Tensor:
        pos = sine_positional_encoding_2d(grid[0], grid[1], tokens.shape[1], dtype=tokens.dtype).to(tokens.device)
        x = tokens.unsqueeze(0)
        mem = memory.unsqueeze(0) if memory.shape[0] else None
        mem_pos = memory_pos.unsqueeze(0) if memory.shape[0] else None
        for layer in self.layers:
            x, _ = layer(x, pos=pos.unsqueeze(0), memory=mem, memory_pos=mem_pos)
        return self.norm(x[0])


def attend_mask_memory(
    attention: MemoryAttention,
    temporal: TemporalEmbedding,
    tokens: Tensor,
    grid: tuple[int, int],
    frame_index: int,
    bank: MaskMemoryBank,
) -> Tensor:
    """F_mask for the current frame from its tokens and the mask memory bank."""
    entries = bank.entries
    for entry in entries:
        if entry.memory.shape != tokens.shape:
            raise InputError(
                f"Mask memory of frame {entry.frame_index} has shape {tuple(entry.memory.shape)}, "
                f"current features have {tuple(tokens.shape)}"
            )
    memory = stack_memories(
        [entry.memory for entry in entries],
        [temporal(frame_index - entry.frame_index) for entry in entries],
        tokens,
    )
    pos = sine_positional_encoding_2d(grid[0], grid[1], tokens.shape[1], dtype=tokens.dtype).to(tokens.device)
    memory_pos = pos.repeat(len(entries), 1)
    return attention(tokens, grid, memory, memory_pos)
