# Output writer modules
from .base import BaseWriter, FramePayload, WriterGroup
from .debug import DebugWriter, heat_to_rgb
from .overlay import OverlayWriter, render_overlay
from .plots import plot_metrics, read_metrics_log
from .predictions import PredictionWriter, read_predictions

__all__ = [
    "BaseWriter",
    "FramePayload",
    "WriterGroup",
    "DebugWriter",
    "heat_to_rgb",
    "OverlayWriter",
    "render_overlay",
    "plot_metrics",
    "read_metrics_log",
    "PredictionWriter",
    "read_predictions",
]
