"""Base writer classes and the per-frame payload."""

import os
import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import structlog

from src.core.base import BleedAnnotation
from src.pointbranch.base import FlowField

log = structlog.get_logger()


@dataclass
class FramePayload:
    """One frame's image, predictions and (optionally) ground truth at source resolution."""
    clip_id: str
    frame_index: int
    image: np.ndarray  # H x W x 3 in [0, 1]
    mask: np.ndarray  # H x W bool
    point: Optional[tuple[float, float]]  # declared point, pixels; None if absent
    score: float
    gt: Optional[BleedAnnotation] = None
    edge_logits: Optional[np.ndarray] = None  # stride-4 map at model resolution
    attention: dict[str, np.ndarray] = field(default_factory=dict)  # name -> coarse grid map
    flow: Optional[FlowField] = None

    @property
    def size(self) -> tuple[int, int]:
        return self.image.shape[0], self.image.shape[1]


class BaseWriter(ABC):
    """Abstract base class for artifact writers."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)

    @abstractmethod
    def write(self, payload: FramePayload) -> bool:
        """
        Write artifacts for one frame.

        Args:
            payload: The frame data to write

        Returns:
            True if everything was written
        """
        pass

    def close(self) -> None:
        pass

    def health_check(self) -> bool:
        """Check that the output directory is writable."""
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            return os.access(self.out_dir, os.W_OK)
        except OSError as e:
            log.error("Output directory unavailable", writer=type(self).__name__, path=str(self.out_dir), error=str(e))
            return False


class WriterGroup:
    """
    Fans each payload out to several writers.

    A failing writer is logged and counted; the others still run.
    """

    def __init__(self, writers: list[BaseWriter]):
        self.writers = writers
        self.failures: dict[str, int] = {type(w).__name__: 0 for w in writers}
        self._lock = threading.Lock()

    def write(self, payload: FramePayload) -> int:
        """Returns the number of writers that failed on this payload."""
        failed = 0
        for writer in self.writers:
            name = type(writer).__name__
            try:
                ok = writer.write(payload)
            except Exception as e:
                log.error("Writer failed", writer=name, clip=payload.clip_id, frame=payload.frame_index, error=str(e))
                ok = False
            if not ok:
                failed += 1
                with self._lock:
                    self.failures[name] += 1
        return failed

    def close(self) -> None:
        for writer in self.writers:
            writer.close()
        total = sum(self.failures.values())
        if total:
            log.warning("Writers reported failures", **self.failures)

    def __len__(self) -> int:
        return len(self.writers)
