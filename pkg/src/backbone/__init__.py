# Backbone modules
from .encoder import FeaturePyramid, HybridEncoder, encode_window

__all__ = ["FeaturePyramid", "HybridEncoder", "encode_window"]
