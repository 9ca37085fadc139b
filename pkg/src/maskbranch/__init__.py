# Mask branch modules
from .branch import MaskBranch, MaskOutput, bank_push
from .decoder import MaskDecoder, binarize
from .edge_generator import EdgeGenerator
from .gabor import GaborBank, GaborParams, discrete_laplacian, gabor_kernel, gabor_value, laplacian_of_gabor
from .memory import MaskMemoryBank, MaskMemoryEncoder, MaskMemoryEntry, MemoryAttention, TemporalEmbedding, attend_mask_memory
from .prompts import FourierPositionEncoding, PromptEncoder, encode_prompts

__all__ = [
    "MaskBranch",
    "MaskOutput",
    "bank_push",
    "MaskDecoder",
    "binarize",
    "EdgeGenerator",
    "GaborBank",
    "GaborParams",
    "discrete_laplacian",
    "gabor_kernel",
    "gabor_value",
    "laplacian_of_gabor",
    "MaskMemoryBank",
    "MaskMemoryEncoder",
    "MaskMemoryEntry",
    "MemoryAttention",
    "TemporalEmbedding",
    "attend_mask_memory",
    "FourierPositionEncoding",
    "PromptEncoder",
    "encode_prompts",
]
