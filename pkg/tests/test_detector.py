"""Tests for the online detector's per-frame step."""

import numpy as np
import pytest
import torch

from src.core.base import ImageFrame
from src.core.errors import InputError
from src.detector import StreamState

from .conftest import make_clip


@pytest.fixture
def clip_and_detector(detector_factory):
    clip, spec, _ = make_clip()
    detector = detector_factory(specs=(spec,)).eval()
    return clip, spec, detector


def run_stream(detector, clip, **kwargs):
    state = StreamState(detector.config)
    outputs = []
    with torch.no_grad():
        for frame in clip.images:
            outputs.append(detector.step(frame, state, **kwargs))
    return outputs, state


class TestStep:
    def test_banks_hold_preceding_frames(self, clip_and_detector):
        clip, _, detector = clip_and_detector
        capacity = detector.config.memory_capacity
        state = StreamState(detector.config)
        with torch.no_grad():
            for k, frame in enumerate(clip.images):
                assert len(state.mask_bank) == min(k, capacity)
                assert len(state.point_bank) == min(k, capacity)
                assert all(i < frame.frame_index for i in state.mask_bank.frame_indices)
                detector.step(frame, state)
        assert state.mask_bank.frame_indices == [len(clip) - 2, len(clip) - 1]

    def test_output_shapes(self, clip_and_detector):
        clip, _, detector = clip_and_detector
        outputs, _ = run_stream(detector, clip)
        first = outputs[0]
        assert first.binary_mask().shape == (32, 32)
        assert first.flow is None
        assert (first.offset.dx, first.offset.dy) == (0.0, 0.0)
        prediction = outputs[-1].prediction()
        assert 0.0 <= prediction.coord[0] <= 1.0 and 0.0 <= prediction.score <= 1.0

    def test_offset_follows_camera_with_empty_offset_mask(self, clip_and_detector):
        clip, spec, detector = clip_and_detector
        outputs, _ = run_stream(detector, clip, offset_mask=np.zeros((32, 32), dtype=bool))
        for k in range(1, len(clip)):
            assert outputs[k].offset.as_array() == pytest.approx(spec.camera_path[k])
            assert outputs[k].flow.pair == (k - 1, k)

    def test_deterministic_across_builds(self, detector_factory):
        clip, spec, _ = make_clip()
        a, _ = run_stream(detector_factory(specs=(spec,)).eval(), clip)
        b, _ = run_stream(detector_factory(specs=(spec,)).eval(), clip)
        for x, y in zip(a, b):
            assert torch.equal(x.mask.logits, y.mask.logits)
            assert torch.equal(x.point.coord, y.point.coord)

    def test_past_outputs_ignore_future_frames(self, clip_and_detector):
        clip, _, detector = clip_and_detector
        full, _ = run_stream(detector, clip)
        state = StreamState(detector.config)
        with torch.no_grad():
            for frame in clip.images[:3]:
                partial = detector.step(frame, state)
        assert torch.equal(partial.mask.logits, full[2].mask.logits)


class TestGradientPartitions:
    def test_mask_step_freezes_point_branch(self, clip_and_detector):
        clip, _, detector = clip_and_detector
        out = detector.step(clip.images[0], StreamState(detector.config), mask_grad=True, point_grad=False)
        assert out.mask.logits.requires_grad
        assert not out.point.coord.requires_grad

    def test_point_step_freezes_mask_branch(self, clip_and_detector):
        clip, _, detector = clip_and_detector
        out = detector.step(clip.images[0], StreamState(detector.config), mask_grad=False, point_grad=True)
        assert not out.mask.logits.requires_grad
        assert out.point.coord.requires_grad

    def test_partitions_cover_every_parameter_once(self, clip_and_detector):
        _, _, detector = clip_and_detector
        theta = {id(p) for p in detector.theta_parameters()}
        vartheta = {id(p) for p in detector.vartheta_parameters()}
        assert not theta & vartheta
        assert theta | vartheta == {id(p) for p in detector.parameters()}


class TestStreamErrors:
    def test_cross_clip_frame_rejected(self, clip_and_detector):
        clip, _, detector = clip_and_detector
        state = StreamState(detector.config)
        with torch.no_grad():
            detector.step(clip.images[0], state)
            stranger = ImageFrame(clip.images[1].pixels, 1, "other")
            with pytest.raises(InputError):
                detector.step(stranger, state)

    def test_reset_allows_a_new_clip(self, clip_and_detector):
        clip, _, detector = clip_and_detector
        state = StreamState(detector.config)
        with torch.no_grad():
            detector.step(clip.images[0], state)
            state.reset()
            assert len(state.mask_bank) == 0
            detector.step(ImageFrame(clip.images[0].pixels, 0, "other"), state)
        assert state.clip_id == "other"

    def test_repeated_frame_rejected(self, clip_and_detector):
        clip, _, detector = clip_and_detector
        state = StreamState(detector.config)
        with torch.no_grad():
            detector.step(clip.images[1], state)
            with pytest.raises(InputError):
                detector.step(clip.images[1], state)

    def test_wrong_resolution_rejected(self, clip_and_detector):
        _, _, detector = clip_and_detector
        frame = ImageFrame(np.zeros((48, 48, 3)), 0, "clip_a")
        with pytest.raises(InputError):
            detector.step(frame, StreamState(detector.config))
