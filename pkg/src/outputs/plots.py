"""Metric curves from a training metrics log."""

import json
from pathlib import Path
from typing import Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import structlog  # noqa: E402

log = structlog.get_logger()


def read_metrics_log(path: Union[str, Path]) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def plot_metrics(log_path: Union[str, Path], out_dir: Union[str, Path]) -> list[Path]:
    """
    Write per-epoch line plots: segmentation (IoU, Dice), PCK at each
    threshold, and both branch losses.

    Returns:
        Paths of the written PNGs (empty if the log has no records)
    """
    records = read_metrics_log(log_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not records:
        log.warning("Metrics log is empty", path=str(log_path))
        return []

    epochs = [r["epoch"] for r in records]
    written = []

    series = {
        "segmentation.png": ("Segmentation", {"IoU": "iou", "Dice": "dice"}),
        "losses.png": ("Training losses", {"L_m": "loss_mask", "L_p": "loss_point"}),
    }
    pck_keys = sorted({k for r in records for k in (r.get("pck") or {})}, key=float)
    for name, (title, keys) in series.items():
        written.append(_plot(out_dir / name, title, epochs, {label: [r.get(key) for r in records] for label, key in keys.items()}))
    written.append(_plot(
        out_dir / "pck.png",
        "PCK",
        epochs,
        {f"PCK@{float(k):.0%}": [(r.get("pck") or {}).get(k) for r in records] for k in pck_keys},
    ))
    log.info("Plots written", count=len(written), out=str(out_dir))
    return written


def _plot(path: Path, title: str, epochs: list[int], curves: dict[str, list]) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, values in curves.items():
        points = [(e, v) for e, v in zip(epochs, values) if v is not None]
        if points:
            xs, ys = zip(*points)
            ax.plot(xs, ys, marker="o", label=label)
    ax.set_title(title)
    ax.set_xlabel("epoch")
    ax.grid(alpha=0.3)
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
