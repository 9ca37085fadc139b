"""
On-disk dataset layout: loading, validation and writing.

    root/clips/<clip_id>/frames/%06d.png     8-bit RGB
    root/clips/<clip_id>/masks/%06d.png      8-bit gray, >= 128 is bleed
    root/clips/<clip_id>/annotations.json    {"fps", "frames": [{"idx", "point", "has_region"}]}
    root/clips/<clip_id>/camera_path.json    synthetic clips only
    root/splits.json                         {"train": [...], "test": [...]}
"""

import json
from pathlib import Path
from typing import Optional, Union

import cv2
import numpy as np
import structlog

from src.core.base import BleedAnnotation, ImageFrame
from src.core.errors import ClipLoadError, InputError
from src.data.base import Clip

log = structlog.get_logger()

MASK_THRESHOLD = 128
FRAME_NAME = "{:06d}.png"

PathLike = Union[str, Path]


def clip_dir(root: PathLike, clip_id: str) -> Path:
    return Path(root) / "clips" / clip_id


def load_clip(root: PathLike, clip_id: str) -> Clip:
    """
    Load and validate one clip.

    Raises:
        ClipLoadError: missing files, size mismatches or malformed records
    """
    directory = clip_dir(root, clip_id)
    annotation_file = directory / "annotations.json"
    if not annotation_file.exists():
        raise ClipLoadError(f"Clip '{clip_id}': missing {annotation_file}", clip_id=clip_id)

    try:
        meta = json.loads(annotation_file.read_text())
    except json.JSONDecodeError as e:
        raise ClipLoadError(f"Clip '{clip_id}': annotations.json is not valid JSON ({e})", clip_id=clip_id) from e

    records = meta.get("frames") if isinstance(meta, dict) else None
    if not isinstance(records, list) or not records:
        raise ClipLoadError(f"Clip '{clip_id}': annotations.json has no frame records", clip_id=clip_id)

    frames = []
    for record in sorted(records, key=lambda r: r.get("idx", -1) if isinstance(r, dict) else -1):
        idx = _record_index(record, clip_id)
        pixels = _read_frame(directory / "frames" / FRAME_NAME.format(idx), clip_id, idx)
        size = pixels.shape[:2]
        mask = _read_mask(directory / "masks" / FRAME_NAME.format(idx), clip_id, idx, size)

        point = record.get("point")
        if point is not None:
            if not (isinstance(point, (list, tuple)) and len(point) == 2
                    and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in point)):
                raise ClipLoadError(
                    f"Clip '{clip_id}' frame {idx}: malformed point {point!r}", clip_id=clip_id, frame=idx
                )
            point = (float(point[0]), float(point[1]))

        try:
            annotation = BleedAnnotation(mask=mask, point=point)
            frame = ImageFrame(pixels=pixels, frame_index=idx, clip_id=clip_id)
        except InputError as e:
            raise ClipLoadError(f"Clip '{clip_id}' frame {idx}: {e}", clip_id=clip_id, frame=idx) from e

        declared = record.get("has_region")
        if declared is not None and bool(declared) != annotation.has_region:
            raise ClipLoadError(
                f"Clip '{clip_id}' frame {idx}: has_region={declared} disagrees with the mask file",
                clip_id=clip_id,
                frame=idx,
            )
        issue = annotation.check_bounds(size)
        if issue:
            raise ClipLoadError(f"Clip '{clip_id}' frame {idx}: {issue}", clip_id=clip_id, frame=idx)
        frames.append((frame, annotation))

    return Clip(clip_id=clip_id, frames=tuple(frames), fps_tag=float(meta.get("fps", 2.0)))


def write_clip(root: PathLike, clip: Clip) -> Path:
    """Write a clip in the documented layout; masks are written for every frame."""
    directory = clip_dir(root, clip.clip_id)
    (directory / "frames").mkdir(parents=True, exist_ok=True)
    (directory / "masks").mkdir(parents=True, exist_ok=True)

    records = []
    for frame, annotation in clip.frames:
        name = FRAME_NAME.format(frame.frame_index)
        rgb = np.clip(np.rint(frame.pixels * 255.0), 0, 255).astype(np.uint8)
        cv2.imwrite(str(directory / "frames" / name), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
        mask = annotation.full_mask(frame.size).astype(np.uint8) * 255
        cv2.imwrite(str(directory / "masks" / name), mask)
        records.append({
            "idx": frame.frame_index,
            "point": [round(annotation.point[0], 3), round(annotation.point[1], 3)] if annotation.point else None,
            "has_region": annotation.has_region,
        })

    payload = {"fps": clip.fps_tag, "frames": records}
    (directory / "annotations.json").write_text(json.dumps(payload, indent=1))
    return directory


def write_camera_path(root: PathLike, clip_id: str, image_size: tuple[int, int], camera_path) -> Path:
    path = clip_dir(root, clip_id) / "camera_path.json"
    payload = {
        "image_size": [int(image_size[0]), int(image_size[1])],
        "camera_path": [[float(dx), float(dy)] for dx, dy in camera_path],
    }
    path.write_text(json.dumps(payload))
    return path


def read_camera_path(root: PathLike, clip_id: str) -> Optional[tuple[tuple[int, int], list[tuple[float, float]]]]:
    """(image_size, camera_path) from the synthetic sidecar, or None if absent."""
    path = clip_dir(root, clip_id) / "camera_path.json"
    if not path.exists():
        return None
    payload = json.loads(path.read_text())
    size = tuple(payload["image_size"])
    return (size[0], size[1]), [(float(dx), float(dy)) for dx, dy in payload["camera_path"]]


def write_splits(root: PathLike, train: list[str], test: list[str]) -> Path:
    path = Path(root) / "splits.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"train": list(train), "test": list(test)}, indent=1))
    return path


def read_splits(root: PathLike) -> dict[str, list[str]]:
    path = Path(root) / "splits.json"
    if not path.exists():
        raise ClipLoadError(f"Missing {path}")
    splits = json.loads(path.read_text())
    if not isinstance(splits, dict) or not all(isinstance(v, list) for v in splits.values()):
        raise ClipLoadError(f"{path} must map split names to clip id lists")
    return splits


class BleedDataset:
    """Dataset root with splits; clips are loaded lazily."""

    def __init__(self, root: PathLike):
        self.root = Path(root)
        self.splits = read_splits(self.root)

    def clip_ids(self, split: str) -> list[str]:
        if split not in self.splits:
            raise ClipLoadError(f"Unknown split '{split}' (have {sorted(self.splits)})")
        return list(self.splits[split])

    def clip(self, clip_id: str) -> Clip:
        return load_clip(self.root, clip_id)

    def clips(self, split: str) -> list[Clip]:
        return [self.clip(clip_id) for clip_id in self.clip_ids(split)]

    def camera_paths(self, split: Optional[str] = None) -> dict[str, tuple[tuple[int, int], list]]:
        """Synthetic ground-truth motion per clip, for the injected flow backend."""
        ids = self.clip_ids(split) if split else [cid for ids in self.splits.values() for cid in ids]
        paths = {}
        for clip_id in ids:
            sidecar = read_camera_path(self.root, clip_id)
            if sidecar is not None:
                paths[clip_id] = sidecar
        return paths


def _record_index(record, clip_id: str) -> int:
    if not isinstance(record, dict):
        raise ClipLoadError(f"Clip '{clip_id}': frame record {record!r} is not an object", clip_id=clip_id)
    idx = record.get("idx")
    if not isinstance(idx, int) or isinstance(idx, bool) or idx < 0:
        raise ClipLoadError(f"Clip '{clip_id}': malformed frame index {idx!r}", clip_id=clip_id)
    return idx


def _read_frame(path: Path, clip_id: str, idx: int) -> np.ndarray:
    if not path.exists():
        raise ClipLoadError(f"Clip '{clip_id}' frame {idx}: missing frame file {path}", clip_id=clip_id, frame=idx)
    bgr = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if bgr is None:
        raise ClipLoadError(f"Clip '{clip_id}' frame {idx}: unreadable frame file {path}", clip_id=clip_id, frame=idx)
    return cv2.cvtColor(bgr, cv2.COLOR_BGR2RGB).astype(np.float32) / 255.0


def _read_mask(path: Path, clip_id: str, idx: int, size: tuple[int, int]) -> Optional[np.ndarray]:
    if not path.exists():
        return None
    gray = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if gray is None:
        raise ClipLoadError(f"Clip '{clip_id}' frame {idx}: unreadable mask file {path}", clip_id=clip_id, frame=idx)
    if gray.shape != tuple(size):
        raise ClipLoadError(
            f"Clip '{clip_id}' frame {idx}: mask size {gray.shape[0]}x{gray.shape[1]} "
            f"does not match frame size {size[0]}x{size[1]}",
            clip_id=clip_id,
            frame=idx,
        )
    return gray >= MASK_THRESHOLD
