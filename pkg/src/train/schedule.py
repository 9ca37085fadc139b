"""Warm-up plus linear-decay learning rate."""

from typing import Optional

from src.config import TrainSection

WARMUP_FRACTION = 0.05


def lr_schedule(t: int, warmup: int, total: int, max_lr: float) -> float:
    """
    Learning rate at step t.

    Rises linearly to max_lr at t = warmup, then falls linearly to 0 at t = total.
    """
    if t <= warmup:
        return max_lr * t / warmup if warmup > 0 else max_lr
    if t >= total:
        return 0.0
    return max_lr * (total - t) / (total - warmup)


def resolve_schedule(section: TrainSection, windows_per_epoch: int) -> tuple[int, int]:
    """(warmup, total) steps from the config and the size of the training set."""
    total: Optional[int] = section.total_steps
    if total is None:
        total = section.epochs * windows_per_epoch
        if section.max_iterations is not None:
            total = min(total, section.max_iterations)
    total = max(total, 2)
    warmup = section.warmup_steps
    if warmup is None:
        warmup = max(1, round(WARMUP_FRACTION * total))
    return min(warmup, total - 1), total
