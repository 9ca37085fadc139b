# Point branch modules
from .base import FlowField, Offset, PointPrediction, normalize_point
from .branch import PointBranch, PointOutput
from .decoder import PointDecoder, decode_point
from .flow import (
    ClassicalFlow,
    ExternalFlow,
    FlowBackend,
    InjectedFlow,
    build_flow_backend,
    estimate_flow,
    read_flo,
    write_flo,
)
from .memory import PointMemoryBank, PointMemoryEncoder, PointMemoryEntry, point_bank_push, point_heatmap
from .offset import mean_background_offset, zero_offset
from .reference import OffsetEmbedding, attend_point_memory, build_reference_features

__all__ = [
    "FlowField",
    "Offset",
    "PointPrediction",
    "normalize_point",
    "PointBranch",
    "PointOutput",
    "PointDecoder",
    "decode_point",
    "ClassicalFlow",
    "ExternalFlow",
    "FlowBackend",
    "InjectedFlow",
    "build_flow_backend",
    "estimate_flow",
    "read_flo",
    "write_flo",
    "PointMemoryBank",
    "PointMemoryEncoder",
    "PointMemoryEntry",
    "point_bank_push",
    "point_heatmap",
    "mean_background_offset",
    "zero_offset",
    "OffsetEmbedding",
    "attend_point_memory",
    "build_reference_features",
]
