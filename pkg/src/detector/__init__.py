# Detector modules
from .base import FrameOutput
from .model import OnlineDetector, build_detector
from .stream import StreamState

__all__ = ["FrameOutput", "OnlineDetector", "build_detector", "StreamState"]
