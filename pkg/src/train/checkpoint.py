"""Versioned checkpoint container."""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional, Union

import structlog
import torch

from src.config import ModelConfig
from src.core.errors import CheckpointError, ConfigError
from src.detector.model import OnlineDetector
from src.train.alternating import OptimState

log = structlog.get_logger()

FORMAT_VERSION = 1
SEGMENTS = ("backbone", "maskbranch", "pointbranch", "config_snapshot", "step")


@dataclass
class Checkpoint:
    path: Path
    payload: dict[str, Any]

    @property
    def config(self) -> ModelConfig:
        try:
            return ModelConfig.from_flat(self.payload["config_snapshot"], source=str(self.path))
        except ConfigError as e:
            raise CheckpointError(f"{self.path}: stored config is invalid ({e})") from e

    @property
    def step(self) -> int:
        return int(self.payload["step"])

    @property
    def epoch(self) -> int:
        return int(self.payload.get("epoch", -1))

    @property
    def best_score(self) -> Optional[float]:
        return self.payload.get("best_score")

    def restore(self, detector: OnlineDetector, optim: Optional[OptimState] = None) -> None:
        """Load weights (and optimizer state when given) in place."""
        try:
            for name in ("backbone", "maskbranch", "pointbranch"):
                getattr(detector, name).load_state_dict(self.payload[name])
            if optim is not None:
                if "optimizer_A" not in self.payload or "optimizer_B" not in self.payload:
                    raise CheckpointError(f"{self.path} has no optimizer state to resume from")
                optim.load_state_dict(self.payload)
        except (RuntimeError, KeyError, ValueError) as e:
            raise CheckpointError(f"{self.path}: cannot restore ({e})") from e


def save_checkpoint(
    path: Union[str, Path],
    detector: OnlineDetector,
    optim: Optional[OptimState],
    config: ModelConfig,
    epoch: int,
    best_score: Optional[float] = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "format_version": FORMAT_VERSION,
        "backbone": detector.backbone.state_dict(),
        "maskbranch": detector.maskbranch.state_dict(),
        "pointbranch": detector.pointbranch.state_dict(),
        "config_snapshot": config.to_flat(),
        "step": optim.step if optim is not None else 0,
        "epoch": epoch,
        "best_score": best_score,
    }
    if optim is not None:
        payload["optimizer_A"] = optim.optimizer_a.state_dict()
        payload["optimizer_B"] = optim.optimizer_b.state_dict()
    tmp = path.with_suffix(path.suffix + ".tmp")
    torch.save(payload, tmp)
    tmp.replace(path)
    log.debug("Checkpoint saved", path=str(path), epoch=epoch, step=payload["step"])
    return path


def load_checkpoint(path: Union[str, Path], config: Optional[ModelConfig] = None) -> Checkpoint:
    """
    Read and check a checkpoint.

    Args:
        path: checkpoint file
        config: if given, its architecture keys must match the stored ones

    Raises:
        CheckpointError: unreadable file, wrong version, missing segments or
            architecture mismatch
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e

    if not isinstance(payload, dict):
        raise CheckpointError(f"{path} is not a checkpoint container")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: format version {version!r}, expected {FORMAT_VERSION}")
    missing = [name for name in SEGMENTS if name not in payload]
    if missing:
        raise CheckpointError(f"{path}: missing segments {missing}")

    checkpoint = Checkpoint(path=path, payload=payload)
    if config is not None:
        stored = checkpoint.config.architecture()
        wanted = config.architecture()
        diff = sorted(k for k in set(stored) | set(wanted) if stored.get(k) != wanted.get(k))
        if diff:
            raise CheckpointError(f"{path}: architecture differs from the config on {diff}")
    return checkpoint
