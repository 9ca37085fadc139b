"""
Online per-clip evaluation.

Each clip streams frame by frame through a fresh StreamState. Clips run
concurrently in worker threads bounded by a semaphore; a clip that fails to
load or evaluate is logged, counted and left out of the aggregate.
"""

import asyncio
import copy
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import structlog
import torch
from tqdm import tqdm

from src.config import ModelConfig
from src.core.base import BleedAnnotation
from src.data.base import Clip
from src.data.clips import BleedDataset
from src.data.transforms import prepare_clip, resize_mask
from src.detector.model import OnlineDetector
from src.detector.stream import StreamState
from src.eval.metrics import PointRecord
from src.eval.report import ClipMetrics, EvalReport, score_clip
from src.outputs.base import FramePayload, WriterGroup

log = structlog.get_logger()

ClipSource = Callable[[], Clip]


@dataclass
class FrameRecord:
    frame_index: int
    mask: np.ndarray  # source resolution
    point: PointRecord  # source pixel coordinates


class Evaluator:
    """
    Runs a detector (or the ground truth, in oracle mode) over clips.

    Args:
        detector: trained detector; None requires oracle=True
        config: run configuration
        writers: optional per-frame artifact writers
        oracle: use ground truth as the prediction (upper-bound check)
        jobs: clips evaluated concurrently
    """

    def __init__(
        self,
        detector: Optional[OnlineDetector],
        config: ModelConfig,
        writers: Optional[WriterGroup] = None,
        oracle: bool = False,
        jobs: int = 1,
    ):
        if detector is None and not oracle:
            raise ValueError("Evaluator needs a detector unless oracle=True")
        self.detector = detector
        self.config = config
        self.writers = writers
        self.oracle = oracle
        self.jobs = max(1, jobs)
        self.threshold = config.eval.existence_threshold

    def predict_clip(self, clip: Clip) -> list[FrameRecord]:
        """Stream one clip with banks reset at its start."""
        if self.oracle:
            return [self._oracle_record(clip, frame.frame_index, gt) for frame, gt in clip.frames]

        resolution = self.config.model.input_resolution
        prepared = prepare_clip(clip, resolution)
        state = StreamState(self.config, clip.clip_id)
        records = []
        detector = self._worker_detector()
        detector.eval()
        with torch.no_grad():
            for (source, gt), (frame, _) in zip(clip.frames, prepared.frames):
                out = detector.step(frame, state)
                mask = resize_mask(out.binary_mask(), source.size)
                prediction = out.prediction()
                point = prediction.as_point(source.size, self.threshold)
                record = FrameRecord(frame.frame_index, mask, PointRecord(point=point, score=prediction.score))
                records.append(record)
                if self.writers is not None:
                    self.writers.write(FramePayload(
                        clip_id=clip.clip_id,
                        frame_index=frame.frame_index,
                        image=source.pixels,
                        mask=mask,
                        point=point,
                        score=prediction.score,
                        gt=gt,
                        edge_logits=(
                            out.mask.edge_logits.cpu().numpy() if out.mask.edge_logits is not None else None
                        ),
                        attention={
                            "mask": out.mask.attention.cpu().numpy(),
                            "point": out.point.attention.cpu().numpy(),
                        },
                        flow=out.flow,
                    ))
        return records

    def _worker_detector(self) -> OnlineDetector:
        """A private copy per clip when clips run in parallel; the flow backend stays shared."""
        if self.jobs == 1:
            return self.detector
        backend = self.detector.flow_backend
        return copy.deepcopy(self.detector, memo={id(backend): backend})

    def evaluate_clip(self, clip: Clip) -> ClipMetrics:
        records = self.predict_clip(clip)
        metrics = score_clip(
            clip.clip_id,
            [r.mask for r in records],
            [r.point for r in records],
            clip.annotations,
            clip.size,
            self.config.eval.pck_thresholds,
            self.threshold,
        )
        log.debug("Clip evaluated", clip=clip.clip_id, frames=metrics.frames)
        return metrics

    def evaluate_sources(self, sources: dict[str, ClipSource], split: str = "test") -> EvalReport:
        """Evaluate clips given as id -> loader; loaders run inside the worker threads."""
        return asyncio.run(self._evaluate_all(sources, split))

    def evaluate_clips(self, clips: Sequence[Clip], split: str = "test") -> EvalReport:
        return self.evaluate_sources({clip.clip_id: (lambda c=clip: c) for clip in clips}, split)

    def evaluate_dataset(self, dataset: BleedDataset, split: str) -> EvalReport:
        sources = {clip_id: (lambda cid=clip_id: dataset.clip(cid)) for clip_id in dataset.clip_ids(split)}
        return self.evaluate_sources(sources, split)

    async def _evaluate_all(self, sources: dict[str, ClipSource], split: str) -> EvalReport:
        semaphore = asyncio.Semaphore(self.jobs)
        progress = tqdm(total=len(sources), desc=f"eval {split}", unit="clip", disable=None, leave=False)

        async def run(clip_id: str, source: ClipSource) -> ClipMetrics:
            async with semaphore:
                try:
                    return await asyncio.to_thread(lambda: self.evaluate_clip(source()))
                finally:
                    progress.update(1)

        ids = sorted(sources)
        results = await asyncio.gather(*(run(cid, sources[cid]) for cid in ids), return_exceptions=True)
        progress.close()

        clips, failed = [], []
        for clip_id, result in zip(ids, results):
            if isinstance(result, Exception):
                log.warning("Clip evaluation failed", clip=clip_id, error=str(result), error_type=type(result).__name__)
                failed.append({"clip_id": clip_id, "error": str(result)})
            else:
                clips.append(result)
        if failed:
            log.warning("Some clips were skipped", failed=len(failed), evaluated=len(clips))
        return EvalReport(split=split, thresholds=tuple(self.config.eval.pck_thresholds), clips=clips, failed=failed)

    def _oracle_record(self, clip: Clip, frame_index: int, gt: BleedAnnotation) -> FrameRecord:
        mask = gt.full_mask(clip.size)
        point = PointRecord(point=gt.point, score=1.0 if gt.point is not None else 0.0)
        return FrameRecord(frame_index, mask, point)


def evaluate(
    detector: Optional[OnlineDetector],
    dataset: BleedDataset,
    split: str,
    config: ModelConfig,
    writers: Optional[WriterGroup] = None,
    oracle: bool = False,
    jobs: int = 1,
) -> EvalReport:
    """Evaluate a detector on a dataset split."""
    evaluator = Evaluator(detector, config, writers=writers, oracle=oracle, jobs=jobs)
    report = evaluator.evaluate_dataset(dataset, split)
    agg = report.aggregate()
    log.info(
        "Evaluation finished",
        split=split,
        clips=len(report.clips),
        failed=len(report.failed),
        iou=agg["iou"],
        dice=agg["dice"],
        pck=agg["pck"],
    )
    return report
