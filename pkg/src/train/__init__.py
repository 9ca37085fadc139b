# Training modules
from .alternating import OptimState, StepReport, alternating_step, build_optim_state, partition_hashes
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .losses import dice_loss, existence_bce, focal_loss, mask_objective, point_objective, smooth_l1
from .schedule import lr_schedule, resolve_schedule
from .trainer import Trainer, TrainResult

__all__ = [
    "OptimState",
    "StepReport",
    "alternating_step",
    "build_optim_state",
    "partition_hashes",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "dice_loss",
    "existence_bce",
    "focal_loss",
    "mask_objective",
    "point_objective",
    "smooth_l1",
    "lr_schedule",
    "resolve_schedule",
    "Trainer",
    "TrainResult",
]
