# Data modules
from .base import Clip, SynthSpec
from .clips import (
    BleedDataset,
    load_clip,
    write_clip,
    read_splits,
    write_splits,
    read_camera_path,
    write_camera_path,
)
from .edges import derive_edge_map
from .synth import synth_clip, make_synth_spec, MOTION_PROFILES
from .transforms import resize_frame, resize_mask, resize_annotation, scale_point, frame_to_tensor, prepare_clip
from .windows import Window, window_sampler

__all__ = [
    "Clip",
    "SynthSpec",
    "BleedDataset",
    "load_clip",
    "write_clip",
    "read_splits",
    "write_splits",
    "read_camera_path",
    "write_camera_path",
    "derive_edge_map",
    "synth_clip",
    "make_synth_spec",
    "MOTION_PROFILES",
    "resize_frame",
    "resize_mask",
    "resize_annotation",
    "scale_point",
    "frame_to_tensor",
    "prepare_clip",
    "Window",
    "window_sampler",
]
