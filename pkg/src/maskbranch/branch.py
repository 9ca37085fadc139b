"""Mask branch: memory attention, edge generator, prompts, decoder and memory encoder."""

from dataclasses import dataclass
from typing import Optional

from torch import Tensor, nn

from src.backbone.encoder import FeaturePyramid
from src.config import ModelConfig
from src.maskbranch.decoder import MaskDecoder, binarize
from src.maskbranch.edge_generator import EdgeGenerator
from src.maskbranch.gabor import GaborBank
from src.maskbranch.memory import (
    MaskMemoryBank,
    MaskMemoryEncoder,
    MaskMemoryEntry,
    MemoryAttention,
    TemporalEmbedding,
    attend_mask_memory,
)
from src.maskbranch.prompts import PromptEncoder, encode_prompts


@dataclass
class MaskOutput:
    """Mask branch output for one frame."""
    logits: Tensor  # (H, W)
    mask: Tensor  # bool (H, W)
    edge_logits: Optional[Tensor]  # (H/4, W/4), None with the edge generator ablated
    attention: Tensor  # decoder mask-token attention over the coarse grid
    features: Tensor  # F_mask before refinement, (s, c)
    frame_index: int


class MaskBranch(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        m = config.model
        ablation = config.ablation
        self.use_edges = ablation.edge_generator
        self.use_point_prompt = ablation.point_prompt
        self.existence_threshold = config.eval.existence_threshold

        self.temporal = TemporalEmbedding(config.memory_capacity, m.channels, enabled=ablation.temporal_embedding)
        self.memory_attention = MemoryAttention(m.channels, m.num_heads, m.memory_layers)
        self.edge_generator = EdgeGenerator(
            m.channels,
            m.channels_f1,
            m.channels_f2,
            GaborBank.from_config(config.gabor),
            use_laplacian=ablation.laplacian_filter,
            use_highres=ablation.highres_fusion,
        )
        self.prompt_encoder = PromptEncoder(m.channels)
        self.decoder = MaskDecoder(m.channels, m.channels_f1, m.channels_f2, m.num_heads, m.decoder_depth)
        self.memory_encoder = MaskMemoryEncoder(m.channels)

    def forward(
        self,
        pyramid: FeaturePyramid,
        bank: MaskMemoryBank,
        point: Optional[Tensor] = None,
        score: Optional[Tensor] = None,
        output_size: Optional[tuple[int, int]] = None,
    ) -> MaskOutput:
        """
        Segment one frame.

        Args:
            pyramid: encoder features of the current frame
            bank: mask memories of preceding frames (not modified)
            point, score: point-branch output for this frame, normalized (x, y)
            output_size: (H, W) of the logits; defaults to 16x the coarse grid
        """
        grid = pyramid.grid
        f_mask = attend_mask_memory(
            self.memory_attention, self.temporal, pyramid.tokens, grid, pyramid.frame_index, bank
        )

        if self.use_edges:
            edge_logits, refined = self.edge_generator(f_mask, grid, pyramid.f1, pyramid.f2)
        else:
            edge_logits, refined = None, f_mask

        if not self.use_point_prompt:
            point, score = None, None
        dense, sparse = encode_prompts(
            self.prompt_encoder, edge_logits, point, score, grid, self.existence_threshold
        )
        logits, attention = self.decoder(
            refined,
            grid,
            dense,
            sparse,
            self.prompt_encoder.dense_pe(grid),
            pyramid.f1,
            pyramid.f2,
            output_size=output_size,
        )
        return MaskOutput(
            logits=logits,
            mask=binarize(logits),
            edge_logits=edge_logits,
            attention=attention,
            features=f_mask,
            frame_index=pyramid.frame_index,
        )

    def encode_memory(self, pyramid: FeaturePyramid, mask: Tensor) -> MaskMemoryEntry:
        """M^m_k from the current features and a binary (H, W) mask."""
        memory = self.memory_encoder(pyramid.tokens, pyramid.grid, mask)
        return MaskMemoryEntry(memory=memory, mask=mask.detach().bool(), frame_index=pyramid.frame_index)


def bank_push(bank: MaskMemoryBank, entry: MaskMemoryEntry) -> MaskMemoryBank:
    """Append an entry, evicting the oldest beyond capacity."""
    bank.push(entry)
    return bank
