"""Per-frame prediction files: mask PNGs and a points JSONL per clip."""

import json
import threading
from pathlib import Path

import cv2
import numpy as np
import structlog

from .base import BaseWriter, FramePayload

log = structlog.get_logger()

MASK_NAME = "{:06d}.png"
POINTS_FILE = "points.jsonl"


class PredictionWriter(BaseWriter):
    """
    Writes <out>/<clip>/masks/%06d.png (0/255) and appends
    {"idx", "point", "score"} lines to <out>/<clip>/points.jsonl.
    """

    def __init__(self, out_dir: Path):
        super().__init__(out_dir)
        self._started: set[str] = set()
        self._lock = threading.Lock()

    def write(self, payload: FramePayload) -> bool:
        clip_dir = self.out_dir / payload.clip_id
        try:
            (clip_dir / "masks").mkdir(parents=True, exist_ok=True)
            mask = payload.mask.astype(np.uint8) * 255
            if not cv2.imwrite(str(clip_dir / "masks" / MASK_NAME.format(payload.frame_index)), mask):
                log.error("Mask write failed", clip=payload.clip_id, frame=payload.frame_index)
                return False

            record = {
                "idx": payload.frame_index,
                "point": [round(payload.point[0], 3), round(payload.point[1], 3)] if payload.point else None,
                "score": round(float(payload.score), 6),
            }
            with self._lock:
                mode = "a" if payload.clip_id in self._started else "w"
                self._started.add(payload.clip_id)
                with open(clip_dir / POINTS_FILE, mode) as f:
                    f.write(json.dumps(record) + "\n")
            return True
        except OSError as e:
            log.error("Prediction write failed", clip=payload.clip_id, frame=payload.frame_index, error=str(e))
            return False


def read_predictions(pred_dir: Path, clip_id: str) -> dict[int, dict]:
    """idx -> {"mask": bool array or None, "point", "score"} for one clip of a prediction tree."""
    clip_dir = Path(pred_dir) / clip_id
    records: dict[int, dict] = {}
    points_file = clip_dir / POINTS_FILE
    if points_file.exists():
        for line in points_file.read_text().splitlines():
            if line.strip():
                record = json.loads(line)
                point = tuple(record["point"]) if record.get("point") else None
                records[int(record["idx"])] = {"point": point, "score": float(record.get("score", 0.0)), "mask": None}
    mask_dir = clip_dir / "masks"
    if mask_dir.exists():
        for path in sorted(mask_dir.glob("*.png")):
            idx = int(path.stem)
            gray = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
            entry = records.setdefault(idx, {"point": None, "score": 0.0, "mask": None})
            entry["mask"] = gray >= 128 if gray is not None else None
    return records
