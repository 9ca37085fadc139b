"""
Synthetic bleeding clips with known camera motion.

The background is an analytic sum of sinusoids, so translating the camera
by a sub-pixel amount is exact everywhere, borders included. A red-tinted
ellipse grows from the bleeding source after the onset frame.
"""

from typing import Optional

import numpy as np

from src.core.base import BleedAnnotation, ImageFrame
from src.core.errors import InputError
from src.core.rng import SeededStream
from src.data.base import Clip, SynthSpec
from src.pointbranch.base import FlowField

MOTION_PROFILES = ("static", "translate", "jitter")

TISSUE_RGB = np.array([0.78, 0.46, 0.40])
BLOOD_RGB = np.array([0.55, 0.06, 0.05])
N_WAVES = 6


def synth_clip(spec: SynthSpec, rng: SeededStream) -> tuple[Clip, list[FlowField]]:
    """
    Render a clip from a spec.

    Returns:
        The clip and one ground-truth FlowField per consecutive frame pair
        (len(flows) == n_frames - 1), equal to camera_path on the background.
    """
    errors = spec.validate()
    if errors:
        raise InputError(f"Invalid synth spec '{spec.clip_id}': " + "; ".join(errors))

    height, width = spec.image_size
    waves = _texture_waves(rng.split(f"texture-{spec.texture_seed}"))
    ys, xs = np.mgrid[0:height, 0:width].astype(np.float64)
    max_axis = 0.25 * min(height, width)

    steps = np.asarray(spec.camera_path, dtype=np.float64).copy()
    steps[0] = 0.0
    camera = np.cumsum(steps, axis=0)

    frames = []
    flows = []
    for t in range(spec.n_frames):
        cx, cy = camera[t]
        texture = _texture(xs - cx, ys - cy, waves)
        pixels = _tissue(texture)

        mask = np.zeros((height, width), dtype=bool)
        point: Optional[tuple[float, float]] = None
        if t >= spec.bleed_onset:
            px, py = spec.source_point_path[t]
            semi_a = min(max_axis, 2.0 + spec.region_growth_rate * (t - spec.bleed_onset + 1))
            semi_b = 0.7 * semi_a
            mask = ((xs - px) / semi_a) ** 2 + ((ys - py) / semi_b) ** 2 <= 1.0
            shade = 0.9 + 0.2 * texture[..., None]
            pixels = np.where(mask[..., None], np.clip(BLOOD_RGB * shade, 0.0, 1.0), pixels)
            if 0.0 <= px <= width - 1 and 0.0 <= py <= height - 1:
                point = (float(px), float(py))

        frames.append((
            ImageFrame(pixels=pixels, frame_index=t, clip_id=spec.clip_id),
            BleedAnnotation(mask=mask if mask.any() else None, point=point),
        ))
        if t > 0:
            dx, dy = spec.camera_path[t]
            flows.append(FlowField.uniform((height, width), dx, dy, pair=(t - 1, t)))

    return Clip(clip_id=spec.clip_id, frames=tuple(frames), fps_tag=spec.fps_tag), flows


def make_synth_spec(
    rng: SeededStream,
    n_frames: int,
    image_size: tuple[int, int],
    motion: str = "jitter",
    clip_id: str = "synth",
) -> SynthSpec:
    """Draw a random spec for one of the motion profiles: static, translate, jitter."""
    if motion not in MOTION_PROFILES:
        raise InputError(f"Unknown motion profile '{motion}' (choose from {MOTION_PROFILES})")
    height, width = image_size
    short = min(height, width)

    if motion == "static":
        steps = np.zeros((n_frames, 2))
    elif motion == "translate":
        angle = rng.uniform(0.0, 2.0 * np.pi)
        speed = rng.uniform(0.01, 0.03) * short
        steps = np.tile([speed * np.cos(angle), speed * np.sin(angle)], (n_frames, 1))
    else:
        limit = 0.02 * short
        steps = rng.uniform(-limit, limit, size=(n_frames, 2))
    steps[0] = 0.0
    steps = np.round(steps, 3)

    start = np.array([rng.uniform(0.3, 0.7) * (width - 1), rng.uniform(0.3, 0.7) * (height - 1)])
    drift = np.cumsum(steps, axis=0)
    source = np.clip(start + drift, [2.0, 2.0], [width - 3.0, height - 3.0])

    return SynthSpec(
        n_frames=n_frames,
        image_size=(height, width),
        camera_path=tuple((float(dx), float(dy)) for dx, dy in steps),
        bleed_onset=int(rng.integers(0, max(1, n_frames // 4))),
        source_point_path=tuple((float(x), float(y)) for x, y in source),
        region_growth_rate=0.02 * short,
        texture_seed=int(rng.integers(0, 2**31 - 1)),
        clip_id=clip_id,
    )


def _texture_waves(rng: SeededStream) -> np.ndarray:
    """Rows of (fx, fy, phase, amplitude) for the background texture."""
    frequency = rng.uniform(1.0 / 40.0, 1.0 / 8.0, size=N_WAVES)
    angle = rng.uniform(0.0, np.pi, size=N_WAVES)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=N_WAVES)
    amplitude = rng.uniform(0.5, 1.0, size=N_WAVES)
    amplitude = 0.45 * amplitude / amplitude.sum()
    return np.stack([frequency * np.cos(angle), frequency * np.sin(angle), phase, amplitude], axis=1)


def _texture(xs: np.ndarray, ys: np.ndarray, waves: np.ndarray) -> np.ndarray:
    """Smooth field in [0.05, 0.95]."""
    field = np.full(xs.shape, 0.5)
    for fx, fy, phase, amplitude in waves:
        field += amplitude * np.sin(2.0 * np.pi * (fx * xs + fy * ys) + phase)
    return field


def _tissue(texture: np.ndarray) -> np.ndarray:
    tint = np.array([1.0, 0.9, 0.85])
    rgb = TISSUE_RGB * (0.55 + 0.9 * texture[..., None] * tint)
    return np.clip(rgb, 0.0, 1.0)
