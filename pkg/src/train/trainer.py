"""
Training loop.

Each epoch visits every window of every training clip once, in an order
drawn from the run's data stream, applies one alternating A+B step per
window, evaluates a frozen copy on the held-out split and appends one
record to the metrics log.
"""

import copy
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import structlog
from tqdm import tqdm

from src.config import ModelConfig
from src.core.rng import SeededStream
from src.data.base import Clip
from src.data.clips import BleedDataset
from src.data.transforms import prepare_clip
from src.data.windows import Window, window_sampler
from src.detector.model import OnlineDetector
from src.eval.evaluator import Evaluator
from src.eval.report import EvalReport
from src.train.alternating import OptimState, StepReport, alternating_step, build_optim_state
from src.train.checkpoint import load_checkpoint, save_checkpoint
from src.train.schedule import resolve_schedule

log = structlog.get_logger()

METRICS_FILE = "metrics.jsonl"
BEST_CHECKPOINT = "best.pt"
LAST_CHECKPOINT = "last.pt"


@dataclass
class TrainResult:
    best_path: Path
    last_path: Path
    metrics_path: Path
    steps: int
    epochs: int
    best_score: Optional[float]


class Trainer:
    """
    Owns the detector, both optimizers and the run directory.

    Args:
        detector: freshly built detector
        config: run configuration
        dataset: dataset with "train" and "test" splits
        out_dir: run directory for checkpoints, metrics and dumps
        rng: the run's root random stream
        eval_split: held-out split evaluated after every epoch
    """

    def __init__(
        self,
        detector: OnlineDetector,
        config: ModelConfig,
        dataset: BleedDataset,
        out_dir: Path,
        rng: SeededStream,
        train_split: str = "train",
        eval_split: Optional[str] = "test",
    ):
        self.detector = detector
        self.config = config
        self.dataset = dataset
        self.out_dir = Path(out_dir)
        self.rng = rng
        self.train_split = train_split
        self.eval_split = eval_split if eval_split in dataset.splits else None

        resolution = config.model.input_resolution
        self.clips: list[Clip] = [prepare_clip(clip, resolution) for clip in dataset.clips(train_split)]
        self.windows: list[Window] = [
            window for clip in self.clips for window in window_sampler(clip, config.window_size)
        ]
        warmup, total = resolve_schedule(config.train, len(self.windows))
        self.optim: OptimState = build_optim_state(detector, config, warmup, total)
        self.start_epoch = 0
        self.best_score: Optional[float] = None
        self.history: list[StepReport] = []

        log.info(
            "Trainer ready",
            clips=len(self.clips),
            windows=len(self.windows),
            warmup=warmup,
            total_steps=total,
            eval_split=self.eval_split,
        )

    @property
    def metrics_path(self) -> Path:
        return self.out_dir / METRICS_FILE

    def resume(self, checkpoint_path: Path) -> None:
        """Continue after the epoch stored in a checkpoint."""
        checkpoint = load_checkpoint(checkpoint_path, self.config)
        checkpoint.restore(self.detector, self.optim)
        self.start_epoch = checkpoint.epoch + 1
        self.best_score = checkpoint.best_score
        if self.metrics_path.exists():
            # drop records written after the checkpoint
            kept = [
                line for line in self.metrics_path.read_text().splitlines()
                if line.strip() and json.loads(line)["epoch"] <= checkpoint.epoch
            ]
            self.metrics_path.write_text("".join(line + "\n" for line in kept))
        log.info("Resumed", checkpoint=str(checkpoint_path), epoch=self.start_epoch, step=self.optim.step)

    def train(self) -> TrainResult:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        t = self.config.train
        max_steps = t.max_iterations if t.max_iterations is not None else self.optim.total
        forcing_steps = int(t.teacher_forcing * self.optim.total)
        best_path = self.out_dir / BEST_CHECKPOINT
        last_path = self.out_dir / LAST_CHECKPOINT
        epoch = self.start_epoch - 1

        for epoch in range(self.start_epoch, t.epochs):
            if self.optim.step >= max_steps:
                break
            order = self.rng.split("data").split(str(epoch)).permutation(len(self.windows))
            reports: list[StepReport] = []
            progress = tqdm(order, desc=f"epoch {epoch}", unit="win", disable=None, leave=False)
            for i in progress:
                if self.optim.step >= max_steps:
                    break
                report = alternating_step(
                    self.detector,
                    self.windows[int(i)],
                    self.optim,
                    teacher_forcing=self.optim.step < forcing_steps,
                    dump_dir=self.out_dir / "dumps",
                )
                reports.append(report)
                if report.step % t.log_every == 0:
                    log.info(
                        "Step",
                        step=report.step,
                        loss_mask=round(report.loss_mask, 5),
                        loss_point=round(report.loss_point, 5),
                        lr=report.lr_other,
                    )
            progress.close()
            self.history.extend(reports)

            eval_report = self._evaluate()
            record = self._epoch_record(epoch, reports, eval_report)
            with open(self.metrics_path, "a") as f:
                f.write(json.dumps(record, sort_keys=True) + "\n")

            score = eval_report.selection_score() if eval_report is not None else -record["loss_mask"]
            if self.best_score is None or score > self.best_score:
                self.best_score = score
                save_checkpoint(best_path, self.detector, self.optim, self.config, epoch, self.best_score)
            save_checkpoint(last_path, self.detector, self.optim, self.config, epoch, self.best_score)
            log.info(
                "Epoch finished",
                epoch=epoch,
                step=self.optim.step,
                loss_mask=record["loss_mask"],
                loss_point=record["loss_point"],
                iou=record["iou"],
                pck=record["pck"],
            )

        if not last_path.exists():
            save_checkpoint(last_path, self.detector, self.optim, self.config, epoch, self.best_score)
        if not best_path.exists():
            save_checkpoint(best_path, self.detector, self.optim, self.config, epoch, self.best_score)
        return TrainResult(
            best_path=best_path,
            last_path=last_path,
            metrics_path=self.metrics_path,
            steps=self.optim.step,
            epochs=epoch + 1,
            best_score=self.best_score,
        )

    def _evaluate(self) -> Optional[EvalReport]:
        if self.eval_split is None:
            return None
        backend = self.detector.flow_backend
        frozen = copy.deepcopy(self.detector, memo={id(backend): backend})
        evaluator = Evaluator(frozen, self.config, jobs=self.config.eval.jobs)
        return evaluator.evaluate_dataset(self.dataset, self.eval_split)

    def _epoch_record(self, epoch: int, reports: list[StepReport], eval_report: Optional[EvalReport]) -> dict:
        n = max(len(reports), 1)
        record = {
            "epoch": epoch,
            "step": self.optim.step,
            "windows": len(reports),
            "loss_mask": sum(r.loss_mask for r in reports) / n,
            "loss_point": sum(r.loss_point for r in reports) / n,
            "lr": reports[-1].lr_other if reports else None,
            "iou": None,
            "dice": None,
            "pck": {},
            "fp_area_rate": None,
        }
        if eval_report is not None:
            agg = eval_report.aggregate()
            record.update(iou=agg["iou"], dice=agg["dice"], pck=agg["pck"], fp_area_rate=agg["fp_area_rate"])
        return record
