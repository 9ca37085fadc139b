"""Point branch: reference features, point memory attention, decoder and memory encoder."""

from dataclasses import dataclass

from torch import Tensor, nn

from src.backbone.encoder import FeaturePyramid
from src.config import ModelConfig
from src.maskbranch.memory import MaskMemoryBank, MemoryAttention, TemporalEmbedding
from src.pointbranch.base import Offset, PointPrediction
from src.pointbranch.decoder import PointDecoder
from src.pointbranch.memory import PointMemoryBank, PointMemoryEncoder, PointMemoryEntry
from src.pointbranch.reference import OffsetEmbedding, attend_point_memory, build_reference_features


@dataclass
class PointOutput:
    """Point branch output for one frame."""
    coord: Tensor  # (2,), normalized
    score: Tensor  # ()
    attention: Tensor  # output token attention over the coarse grid
    features: Tensor  # F_point, (s, c)
    frame_index: int

    def prediction(self) -> PointPrediction:
        x, y = self.coord.detach().cpu().tolist()
        return PointPrediction(coord=(x, y), score=float(self.score.detach()), frame_index=self.frame_index)


class PointBranch(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        m = config.model
        ablation = config.ablation
        self.use_memory = ablation.point_memory
        self.use_mask_memory = ablation.mask_memory_in_point

        self.temporal = TemporalEmbedding(config.memory_capacity, m.channels, enabled=ablation.temporal_embedding)
        self.offset_embedding = OffsetEmbedding(m.channels, m.input_resolution)
        self.memory_attention = MemoryAttention(m.channels, m.num_heads, m.memory_layers)
        self.decoder = PointDecoder(m.channels, m.num_heads, m.decoder_depth)
        self.memory_encoder = PointMemoryEncoder(m.channels)

    def forward(self, pyramid: FeaturePyramid, point_bank: PointMemoryBank, mask_bank: MaskMemoryBank) -> PointOutput:
        """Predict the bleeding point of the current frame from past memories only."""
        grid = pyramid.grid
        reference, reference_pos = None, None
        if self.use_memory:
            reference, reference_pos = build_reference_features(
                point_bank,
                mask_bank,
                self.offset_embedding,
                self.temporal,
                grid,
                pyramid.frame_index,
                use_mask_memory=self.use_mask_memory,
            )
        features = attend_point_memory(self.memory_attention, pyramid.tokens, grid, reference, reference_pos)
        coord, score, attention = self.decoder(features, grid)
        return PointOutput(
            coord=coord, score=score, attention=attention, features=features, frame_index=pyramid.frame_index
        )

    def encode_memory(self, output: PointOutput, grid: tuple[int, int], offset: Offset) -> PointMemoryEntry:
        memory = self.memory_encoder(output.features, grid, output.coord, output.score)
        return PointMemoryEntry(memory=memory, offset=offset, frame_index=output.frame_index)
