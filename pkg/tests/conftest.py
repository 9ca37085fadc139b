"""Shared fixtures: a tiny configuration, synthetic clips and a dataset root."""

import numpy as np
import pytest
import torch

from src.config import ModelConfig
from src.core.rng import seeded_rng
from src.data.base import SynthSpec
from src.data.clips import write_camera_path, write_clip, write_splits
from src.data.synth import make_synth_spec, synth_clip
from src.detector.model import build_detector
from src.pointbranch.flow import InjectedFlow

TINY = {
    "model.window_size": 3,
    "model.input_resolution": 32,
    "model.channels": 16,
    "model.channels_f2": 8,
    "model.channels_f1": 8,
    "model.num_heads": 2,
    "model.encoder_depth": 1,
    "model.memory_layers": 1,
    "model.decoder_depth": 1,
    "train.lr_encoder": 1e-3,
    "train.lr_other": 1e-3,
    "train.epochs": 1,
    "train.max_iterations": 4,
    "flow.backend": "injected",
}


def pytest_addoption(parser):
    parser.addoption("--run-slow", action="store_true", default=False, help="run slow acceptance tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="slow: enable with --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(autouse=True)
def _no_env_overrides(monkeypatch):
    import os

    for key in list(os.environ):
        if key.startswith("HEMO_"):
            monkeypatch.delenv(key)


@pytest.fixture(autouse=True)
def _reset_structlog():
    """The CLI binds structlog to pytest's per-test stderr; undo it after each test."""
    yield
    import structlog

    structlog.reset_defaults()


@pytest.fixture
def tiny_config() -> ModelConfig:
    return ModelConfig.from_flat(dict(TINY), source="<tiny>")


@pytest.fixture
def rng():
    return seeded_rng(1234)


def make_clip(clip_id: str = "clip_a", n_frames: int = 6, size: int = 32, motion: str = "translate", seed: int = 3):
    """A synthetic clip and its spec."""
    stream = seeded_rng(seed).split(clip_id)
    spec = make_synth_spec(stream.split("spec"), n_frames, (size, size), motion, clip_id=clip_id)
    clip, flows = synth_clip(spec, stream.split("render"))
    return clip, spec, flows


@pytest.fixture
def synthetic_clip():
    clip, _, _ = make_clip()
    return clip


@pytest.fixture
def dataset_root(tmp_path):
    """Three 6-frame 32x32 clips: two train, one test."""
    root = tmp_path / "data"
    ids = ["clip_a", "clip_b", "clip_c"]
    for i, clip_id in enumerate(ids):
        clip, spec, _ = make_clip(clip_id, seed=i)
        write_clip(root, clip)
        write_camera_path(root, clip_id, spec.image_size, spec.camera_path)
    write_splits(root, train=ids[:2], test=ids[2:])
    return root


@pytest.fixture
def detector_factory(tiny_config):
    """Build a detector whose injected flow knows the given clips' camera paths."""

    def build(config=None, specs: tuple[SynthSpec, ...] = (), dtype=torch.float32):
        config = config or tiny_config
        paths = {s.clip_id: (s.image_size, list(s.camera_path)) for s in specs}
        detector = build_detector(config, seeded_rng(config.seed), InjectedFlow(paths))
        return detector.to(dtype)

    return build


def random_mask(generator: np.random.Generator, size=(16, 16), p=0.3) -> np.ndarray:
    return generator.random(size) < p
