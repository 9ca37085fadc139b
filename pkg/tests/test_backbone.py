"""Tests for the hierarchical image encoder."""

import numpy as np
import pytest
import torch

from src.backbone import HybridEncoder, encode_window
from src.core.base import ImageFrame
from src.core.errors import InputError


@pytest.fixture
def encoder(tiny_config):
    torch.manual_seed(0)
    return HybridEncoder.from_config(tiny_config).eval()


def frame(pixels, index=0):
    return ImageFrame(pixels=pixels, frame_index=index, clip_id="enc")


def test_pyramid_shapes(encoder, tiny_config, rng):
    frames = [frame(rng.uniform(size=(32, 32, 3)), i) for i in range(3)]
    with torch.no_grad():
        pyramids = encode_window(encoder, frames, tiny_config)
    assert [p.frame_index for p in pyramids] == [0, 1, 2]
    for p in pyramids:
        assert p.grid == (2, 2)
        assert p.tokens.shape == (4, 16)
        assert p.f2.shape == (8, 4, 4)
        assert p.f1.shape == (8, 8, 8)


def test_identical_frames_give_identical_pyramids(encoder, tiny_config, rng):
    pixels = rng.uniform(size=(32, 32, 3))
    with torch.no_grad():
        a, b = encode_window(encoder, [frame(pixels, 0), frame(pixels, 1)], tiny_config)
    assert torch.equal(a.tokens, b.tokens)
    assert torch.equal(a.f1, b.f1)
    assert torch.equal(a.f2, b.f2)


def test_black_frame_gives_finite_features(encoder, tiny_config):
    with torch.no_grad():
        (p,) = encode_window(encoder, [frame(np.zeros((32, 32, 3)))], tiny_config)
    assert torch.isfinite(p.tokens).all()
    assert torch.isfinite(p.f1).all()
    assert torch.isfinite(p.f2).all()


def test_gradients_reach_encoder(encoder, tiny_config, rng):
    (p,) = encode_window(encoder, [frame(rng.uniform(size=(32, 32, 3)))], tiny_config)
    (p.tokens.sum() + p.f1.sum() + p.f2.sum()).backward()
    used = [encoder.stem, encoder.stage2, encoder.stage3, encoder.blocks[0].self_attn, encoder.norm]
    assert all(param.grad is not None for module in used for param in module.parameters())


def test_rejects_wrong_resolution(encoder, tiny_config, rng):
    with pytest.raises(InputError, match="not resized"):
        encode_window(encoder, [frame(rng.uniform(size=(48, 48, 3)))], tiny_config)


def test_rejects_oversized_window(encoder, tiny_config, rng):
    frames = [frame(rng.uniform(size=(32, 32, 3)), i) for i in range(4)]
    with pytest.raises(InputError, match="more than N"):
        encode_window(encoder, frames, tiny_config)


def test_rejects_non_finite_tensor(encoder):
    images = torch.zeros(1, 3, 32, 32)
    images[0, 0, 0, 0] = float("nan")
    with pytest.raises(InputError, match="non-finite"):
        encoder(images, [0])
