"""Debug dumps: edge maps, attention maps and raw flow fields."""

import cv2
import numpy as np

from src.pointbranch.flow import write_flo

from .base import BaseWriter, FramePayload
from .overlay import write_rgb


def heat_to_rgb(values: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Min-max normalized map, resized to (H, W), as a uint8 RGB colormap."""
    values = np.asarray(values, dtype=np.float32)
    span = float(values.max() - values.min())
    norm = (values - values.min()) / span if span > 0 else np.zeros_like(values)
    gray = np.clip(np.rint(norm * 255.0), 0, 255).astype(np.uint8)
    gray = cv2.resize(gray, (size[1], size[0]), interpolation=cv2.INTER_NEAREST)
    return cv2.cvtColor(cv2.applyColorMap(gray, cv2.COLORMAP_JET), cv2.COLOR_BGR2RGB)


class DebugWriter(BaseWriter):
    """
    Writes under <out>/<clip>/debug/:
      <frame>_edge.png          sigmoid of the edge logits
      <frame>_attn_<name>.png   decoder attention over the coarse grid
      <frame>.flo               flow from the previous frame
    """

    def write(self, payload: FramePayload) -> bool:
        directory = self.out_dir / payload.clip_id / "debug"
        stem = f"{payload.frame_index:06d}"
        ok = True
        if payload.edge_logits is not None:
            probs = 1.0 / (1.0 + np.exp(-np.asarray(payload.edge_logits, dtype=np.float64)))
            gray = np.clip(np.rint(probs * 255.0), 0, 255).astype(np.uint8)
            gray = cv2.resize(gray, (payload.size[1], payload.size[0]), interpolation=cv2.INTER_LINEAR)
            ok &= write_rgb(directory / f"{stem}_edge.png", np.repeat(gray[..., None], 3, axis=2))
        for name, attention in payload.attention.items():
            ok &= write_rgb(directory / f"{stem}_attn_{name}.png", heat_to_rgb(attention, payload.size))
        if payload.flow is not None:
            write_flo(directory / f"{stem}.flo", payload.flow)
        return bool(ok)
