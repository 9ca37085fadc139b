"""
Dense optical flow backends.

Flow parameters never train: the classical backend has none, and external
callables run under torch.no_grad().
"""

import importlib
import threading
from abc import ABC, abstractmethod
from collections import OrderedDict
from pathlib import Path
from typing import Callable, Optional, Union

import cv2
import numpy as np
import structlog
import torch

from src.config import FlowSection
from src.core.base import ImageFrame
from src.core.errors import ConfigError, InputError
from src.pointbranch.base import FlowField

log = structlog.get_logger()

FLO_MAGIC = 202021.25
MIN_LEVEL_SIZE = 8

# Horn-Schunck neighbourhood average
_HS_AVERAGE = np.array(
    [[1 / 12, 1 / 6, 1 / 12], [1 / 6, 0.0, 1 / 6], [1 / 12, 1 / 6, 1 / 12]], dtype=np.float32
)


class FlowBackend(ABC):
    """Estimates the displacement field from one frame to the next."""

    name = "base"

    @abstractmethod
    def estimate(self, prev: ImageFrame, cur: ImageFrame) -> FlowField:
        """
        Flow from prev to cur.

        Args:
            prev: frame i-1
            cur: frame i, same size as prev

        Returns:
            FlowField on prev's pixel grid with pair (prev.frame_index, cur.frame_index)
        """
        pass


class ClassicalFlow(FlowBackend):
    """
    Coarse-to-fine Horn-Schunck flow with image warping.

    Each pyramid level refines the upsampled flow of the level below through
    warp_iterations linearizations, each solved with solver_iterations
    Jacobi sweeps. Results are cached per (clip, frame pair).
    """

    name = "classical"

    def __init__(
        self,
        pyramid_levels: int = 3,
        warp_iterations: int = 5,
        solver_iterations: int = 50,
        smoothness: float = 0.05,
        cache_size: int = 512,
    ):
        self.pyramid_levels = pyramid_levels
        self.warp_iterations = warp_iterations
        self.solver_iterations = solver_iterations
        self.smoothness = smoothness
        self.cache_size = cache_size
        self._cache: OrderedDict[tuple, FlowField] = OrderedDict()
        self._lock = threading.Lock()

    def estimate(self, prev: ImageFrame, cur: ImageFrame) -> FlowField:
        _check_pair(prev, cur)
        key = (prev.clip_id, prev.frame_index, cur.frame_index, prev.size)
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self._cache.move_to_end(key)
                return cached

        vectors = self.solve(_gray(prev.pixels), _gray(cur.pixels))
        flow = FlowField(vectors=vectors, pair=(prev.frame_index, cur.frame_index))

        with self._lock:
            self._cache[key] = flow
            if len(self._cache) > self.cache_size:
                self._cache.popitem(last=False)
        return flow

    def solve(self, first: np.ndarray, second: np.ndarray) -> np.ndarray:
        """H x W x 2 float64 flow between two gray float32 images."""
        first = cv2.GaussianBlur(first, (5, 5), 1.0)
        second = cv2.GaussianBlur(second, (5, 5), 1.0)
        pyramid = [(first, second)]
        for _ in range(self.pyramid_levels - 1):
            a, b = pyramid[-1]
            if min(a.shape) // 2 < MIN_LEVEL_SIZE:
                break
            pyramid.append((cv2.pyrDown(a), cv2.pyrDown(b)))

        u = np.zeros(pyramid[-1][0].shape, dtype=np.float32)
        v = np.zeros_like(u)
        for level, (a, b) in enumerate(reversed(pyramid)):
            if level > 0:
                height, width = a.shape
                scale_y = height / u.shape[0]
                scale_x = width / u.shape[1]
                u = cv2.resize(u, (width, height), interpolation=cv2.INTER_LINEAR) * scale_x
                v = cv2.resize(v, (width, height), interpolation=cv2.INTER_LINEAR) * scale_y
            for _ in range(self.warp_iterations):
                u, v = self._refine(a, b, u, v)

        return np.stack([u, v], axis=-1).astype(np.float64)

    def _refine(self, first: np.ndarray, second: np.ndarray, u: np.ndarray, v: np.ndarray):
        height, width = first.shape
        ys, xs = np.mgrid[0:height, 0:width].astype(np.float32)
        warped = cv2.remap(second, xs + u, ys + v, cv2.INTER_LINEAR, borderMode=cv2.BORDER_REPLICATE)

        mean = 0.5 * (first + warped)
        iy, ix = np.gradient(mean)
        it = warped - first
        # linearized around the current flow: ix*u + iy*v + residual = 0
        residual = it - ix * u - iy * v
        denominator = self.smoothness ** 2 + ix ** 2 + iy ** 2

        for _ in range(self.solver_iterations):
            u_avg = cv2.filter2D(u, -1, _HS_AVERAGE, borderType=cv2.BORDER_REPLICATE)
            v_avg = cv2.filter2D(v, -1, _HS_AVERAGE, borderType=cv2.BORDER_REPLICATE)
            step = (ix * u_avg + iy * v_avg + residual) / denominator
            u = (u_avg - ix * step).astype(np.float32)
            v = (v_avg - iy * step).astype(np.float32)
        return u, v


class InjectedFlow(FlowBackend):
    """Ground-truth camera motion from synthetic clip sidecars, scaled to the frame size."""

    name = "injected"

    def __init__(self, camera_paths: dict[str, tuple[tuple[int, int], list[tuple[float, float]]]]):
        self.camera_paths = camera_paths

    def estimate(self, prev: ImageFrame, cur: ImageFrame) -> FlowField:
        _check_pair(prev, cur)
        if cur.clip_id not in self.camera_paths:
            raise InputError(f"No camera path for clip '{cur.clip_id}' (injected flow needs synthetic sidecars)")
        (src_h, src_w), path = self.camera_paths[cur.clip_id]
        if not 0 < cur.frame_index < len(path):
            raise InputError(f"Clip '{cur.clip_id}' has no camera step for frame {cur.frame_index}")
        height, width = cur.size
        dx, dy = path[cur.frame_index]
        scale_x = (width - 1) / (src_w - 1)
        scale_y = (height - 1) / (src_h - 1)
        return FlowField.uniform(cur.size, dx * scale_x, dy * scale_y, pair=(prev.frame_index, cur.frame_index))


class ExternalFlow(FlowBackend):
    """Adapter for a user callable f(prev_pixels, cur_pixels) -> H x W x 2 array."""

    name = "external"

    def __init__(self, target: Union[str, Callable]):
        self.fn = _import_callable(target) if isinstance(target, str) else target

    def estimate(self, prev: ImageFrame, cur: ImageFrame) -> FlowField:
        _check_pair(prev, cur)
        with torch.no_grad():
            result = self.fn(prev.pixels, cur.pixels)
        if isinstance(result, torch.Tensor):
            result = result.detach().cpu().numpy()
        vectors = np.asarray(result, dtype=np.float64)
        if vectors.shape != (*cur.size, 2):
            raise InputError(f"External flow returned shape {vectors.shape}, expected {(*cur.size, 2)}")
        return FlowField(vectors=vectors, pair=(prev.frame_index, cur.frame_index))


def build_flow_backend(section: FlowSection, camera_paths: Optional[dict] = None) -> FlowBackend:
    """Instantiate the configured backend."""
    if section.backend == "classical":
        return ClassicalFlow(
            pyramid_levels=section.pyramid_levels,
            warp_iterations=section.warp_iterations,
            solver_iterations=section.solver_iterations,
            smoothness=section.smoothness,
        )
    if section.backend == "injected":
        if camera_paths is None:
            raise ConfigError("flow.backend=injected needs camera_path.json sidecars", fields=["flow.backend"])
        return InjectedFlow(camera_paths)
    if section.backend == "external":
        return ExternalFlow(section.external)
    raise ConfigError(f"Unknown flow backend '{section.backend}'", fields=["flow.backend"])


def estimate_flow(prev: ImageFrame, cur: ImageFrame, backend: FlowBackend) -> FlowField:
    flow = backend.estimate(prev, cur)
    log.debug("Flow estimated", backend=backend.name, pair=flow.pair)
    return flow


def write_flo(path: Union[str, Path], flow: FlowField) -> Path:
    """Write a .flo file: float32 magic, int32 W, int32 H, float32 interleaved (dx, dy)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    height, width = flow.size
    with open(path, "wb") as f:
        np.array([FLO_MAGIC], dtype="<f4").tofile(f)
        np.array([width, height], dtype="<i4").tofile(f)
        flow.vectors.astype("<f4").tofile(f)
    return path


def read_flo(path: Union[str, Path], pair: tuple[int, int] = (0, 1)) -> FlowField:
    with open(path, "rb") as f:
        magic = np.fromfile(f, dtype="<f4", count=1)
        if magic.size != 1 or magic[0] != np.float32(FLO_MAGIC):
            raise InputError(f"{path} is not a .flo file")
        width, height = np.fromfile(f, dtype="<i4", count=2)
        data = np.fromfile(f, dtype="<f4", count=int(width) * int(height) * 2)
    if data.size != width * height * 2:
        raise InputError(f"{path} is truncated")
    return FlowField(vectors=data.reshape(height, width, 2).astype(np.float64), pair=pair)


def _check_pair(prev: ImageFrame, cur: ImageFrame) -> None:
    if prev.size != cur.size:
        raise InputError(f"Flow frames differ in size: {prev.size} vs {cur.size}")


def _gray(pixels: np.ndarray) -> np.ndarray:
    return cv2.cvtColor(np.ascontiguousarray(pixels, dtype=np.float32), cv2.COLOR_RGB2GRAY)


def _import_callable(target: str) -> Callable:
    module_name, _, attr = target.partition(":")
    if not module_name or not attr:
        raise ConfigError(f"flow.external must look like 'module:callable', got '{target}'", fields=["flow.external"])
    try:
        module = importlib.import_module(module_name)
        return getattr(module, attr)
    except (ImportError, AttributeError) as e:
        raise ConfigError(f"Cannot import flow callable '{target}': {e}", fields=["flow.external"]) from e
