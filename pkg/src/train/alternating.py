"""
Alternating two-phase optimization.

Step A updates theta (encoder and mask branch) with the point branch held
fixed; step B re-runs the window and updates vartheta (point branch) with
theta held fixed. The step counter advances once per A+B pair.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import structlog
import torch

from src.config import ModelConfig
from src.core.errors import NonFiniteLossError
from src.core.layers import parameter_hash
from src.data.edges import derive_edge_map
from src.data.windows import Window
from src.detector.model import OnlineDetector
from src.detector.stream import StreamState
from src.pointbranch.base import normalize_point
from src.train.losses import mask_objective, point_objective
from src.train.schedule import lr_schedule

log = structlog.get_logger()


@dataclass
class OptimState:
    """Both optimizers, the step counter and the schedule bounds."""
    optimizer_a: torch.optim.Optimizer  # theta: [encoder group, mask branch group]
    optimizer_b: torch.optim.Optimizer  # vartheta
    warmup: int
    total: int
    lr_encoder: float
    lr_other: float
    step: int = 0

    def apply_schedule(self, t: int) -> tuple[float, float]:
        """Set learning rates for 1-based step t; returns (encoder lr, other lr)."""
        lr_enc = lr_schedule(t, self.warmup, self.total, self.lr_encoder)
        lr_oth = lr_schedule(t, self.warmup, self.total, self.lr_other)
        self.optimizer_a.param_groups[0]["lr"] = lr_enc
        self.optimizer_a.param_groups[1]["lr"] = lr_oth
        for group in self.optimizer_b.param_groups:
            group["lr"] = lr_oth
        return lr_enc, lr_oth

    def state_dict(self) -> dict:
        return {
            "optimizer_A": self.optimizer_a.state_dict(),
            "optimizer_B": self.optimizer_b.state_dict(),
            "step": self.step,
        }

    def load_state_dict(self, state: dict) -> None:
        self.optimizer_a.load_state_dict(state["optimizer_A"])
        self.optimizer_b.load_state_dict(state["optimizer_B"])
        self.step = int(state["step"])


@dataclass
class StepReport:
    step: int
    loss_mask: float
    loss_point: float
    lr_encoder: float
    lr_other: float
    teacher_forcing: bool
    parts: dict[str, float] = field(default_factory=dict)


def build_optim_state(detector: OnlineDetector, config: ModelConfig, warmup: int, total: int) -> OptimState:
    """Adam over the two partitions; every trainable parameter lands in exactly one."""
    t = config.train
    optimizer_a = torch.optim.Adam([
        {"params": list(detector.backbone.parameters()), "lr": t.lr_encoder},
        {"params": list(detector.maskbranch.parameters()), "lr": t.lr_other},
    ])
    optimizer_b = torch.optim.Adam([{"params": list(detector.pointbranch.parameters()), "lr": t.lr_other}])
    return OptimState(
        optimizer_a=optimizer_a,
        optimizer_b=optimizer_b,
        warmup=warmup,
        total=total,
        lr_encoder=t.lr_encoder,
        lr_other=t.lr_other,
    )


def partition_hashes(detector: OnlineDetector) -> tuple[str, str]:
    """(theta hash, vartheta hash)."""
    return parameter_hash(detector.theta_parameters()), parameter_hash(detector.vartheta_parameters())


def alternating_step(
    detector: OnlineDetector,
    window: Window,
    state: OptimState,
    teacher_forcing: bool = False,
    dump_dir: Optional[Path] = None,
) -> StepReport:
    """
    One A+B iteration on a window. Banks start empty for the window.

    Raises:
        NonFiniteLossError: either phase produced a non-finite loss
    """
    config = detector.config
    t = state.step + 1
    lr_enc, lr_oth = state.apply_schedule(t)
    detector.train()
    dtype = next(detector.parameters()).dtype

    targets = []
    for frame, annotation in window.frames:
        full = annotation.full_mask(frame.size)
        gt_point = normalize_point(annotation.point, frame.size) if annotation.point is not None else None
        targets.append((
            torch.from_numpy(full).to(dtype),
            torch.from_numpy(derive_edge_map(full)).to(dtype),
            gt_point,
            full if teacher_forcing else None,
        ))

    # Step A: theta
    state.optimizer_a.zero_grad(set_to_none=True)
    state.optimizer_b.zero_grad(set_to_none=True)
    stream = StreamState(config, window.clip_id)
    mask_losses = []
    parts: dict[str, float] = {}
    for (frame, _), (gt_mask, gt_edge, _, offset_mask) in zip(window.frames, targets):
        out = detector.step(frame, stream, offset_mask=offset_mask, mask_grad=True, point_grad=False)
        loss, terms = mask_objective(out.mask.logits, out.mask.edge_logits, gt_mask, gt_edge, config.loss)
        mask_losses.append(loss)
        _accumulate(parts, terms, len(window))
    loss_mask = torch.stack(mask_losses).mean()
    _check_finite(loss_mask, "mask", t, window, parts, dump_dir)
    loss_mask.backward()
    state.optimizer_a.step()

    # Step B: vartheta, against the updated mask branch
    state.optimizer_a.zero_grad(set_to_none=True)
    state.optimizer_b.zero_grad(set_to_none=True)
    stream = StreamState(config, window.clip_id)
    point_losses = []
    for (frame, _), (_, _, gt_point, offset_mask) in zip(window.frames, targets):
        out = detector.step(frame, stream, offset_mask=offset_mask, mask_grad=False, point_grad=True)
        loss, terms = point_objective(out.point.coord, out.point.score, gt_point, config.loss)
        point_losses.append(loss)
        _accumulate(parts, terms, len(window))
    loss_point = torch.stack(point_losses).mean()
    _check_finite(loss_point, "point", t, window, parts, dump_dir)
    loss_point.backward()
    state.optimizer_b.step()
    state.optimizer_b.zero_grad(set_to_none=True)

    state.step = t
    return StepReport(
        step=t,
        loss_mask=float(loss_mask.detach()),
        loss_point=float(loss_point.detach()),
        lr_encoder=lr_enc,
        lr_other=lr_oth,
        teacher_forcing=teacher_forcing,
        parts=parts,
    )


def _accumulate(parts: dict[str, float], terms: dict[str, float], n: int) -> None:
    for key, value in terms.items():
        parts[key] = parts.get(key, 0.0) + value / n


def _check_finite(
    loss: torch.Tensor, phase: str, step: int, window: Window, parts: dict[str, float], dump_dir: Optional[Path]
) -> None:
    if torch.isfinite(loss).all():
        return
    dump_path = None
    if dump_dir is not None:
        dump_path = Path(dump_dir) / f"nonfinite_step{step:06d}.json"
        dump_path.parent.mkdir(parents=True, exist_ok=True)
        record = {
            "phase": phase,
            "step": step,
            "clip_id": window.clip_id,
            "window_end": window.end,
            "frames": [frame.frame_index for frame, _ in window.frames],
            "parts": {k: (v if math.isfinite(v) else str(v)) for k, v in parts.items()},
        }
        dump_path.write_text(json.dumps(record, indent=1))
    log.error("Non-finite loss", phase=phase, step=step, clip=window.clip_id, dump=str(dump_path))
    raise NonFiniteLossError(
        f"Non-finite {phase} loss at step {step} (clip '{window.clip_id}', frame {window.end})",
        dump_path=str(dump_path) if dump_path else "",
    )
