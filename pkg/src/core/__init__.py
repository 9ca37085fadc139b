# Core modules
from .base import ImageFrame, BleedAnnotation
from .errors import (
    HemoError,
    ConfigError,
    InputError,
    ClipLoadError,
    CheckpointError,
    NonFiniteLossError,
)
from .memory import MemoryBank
from .rng import SeededStream, seeded_rng, torch_seed

__all__ = [
    "ImageFrame",
    "BleedAnnotation",
    "HemoError",
    "ConfigError",
    "InputError",
    "ClipLoadError",
    "CheckpointError",
    "NonFiniteLossError",
    "MemoryBank",
    "SeededStream",
    "seeded_rng",
    "torch_seed",
]
