"""Tests for the masked mean viewpoint offset."""

import numpy as np
import pytest

from src.core.errors import InputError
from src.pointbranch.base import FlowField
from src.pointbranch.offset import mean_background_offset, zero_offset


def test_full_mask_gives_zero_offset():
    flow = FlowField.uniform((4, 4), 2.0, -3.0, pair=(0, 1))
    for mode in ("paper_hw", "background_count"):
        offset = mean_background_offset(flow, np.ones((4, 4), dtype=bool), mode)
        assert (offset.dx, offset.dy) == (0.0, 0.0)


def test_empty_mask_gives_flow_in_both_modes():
    flow = FlowField.uniform((4, 4), 2.0, -3.0, pair=(2, 3))
    for mode in ("paper_hw", "background_count"):
        offset = mean_background_offset(flow, np.zeros((4, 4), dtype=bool), mode)
        assert offset.as_array() == pytest.approx([2.0, -3.0])
        assert offset.frame_index == 3


def test_normalizations_differ_on_partial_mask():
    flow = FlowField.uniform((2, 2), 2.0, 0.0, pair=(0, 1))
    mask = np.array([[True, False], [True, False]])
    assert mean_background_offset(flow, mask, "paper_hw").as_array() == pytest.approx([1.0, 0.0])
    assert mean_background_offset(flow, mask, "background_count").as_array() == pytest.approx([2.0, 0.0])


def test_per_pixel_normalization_scales_by_background_fraction():
    generator = np.random.default_rng(0)
    vectors = generator.normal(size=(8, 8, 2))
    mask = generator.random((8, 8)) < 0.4
    flow = FlowField(vectors=vectors, pair=(0, 1))
    per_pixel = mean_background_offset(flow, mask, "paper_hw").as_array()
    counted = mean_background_offset(flow, mask, "background_count").as_array()
    fraction = (~mask).sum() / mask.size
    assert per_pixel == pytest.approx(counted * fraction)


def test_negated_flow_negates_offset():
    generator = np.random.default_rng(1)
    vectors = generator.normal(size=(6, 6, 2))
    mask = generator.random((6, 6)) < 0.5
    forward = mean_background_offset(FlowField(vectors, (0, 1)), mask).as_array()
    backward = mean_background_offset(FlowField(-vectors, (0, 1)), mask).as_array()
    assert backward == pytest.approx(-forward)


def test_regions():
    vectors = np.zeros((2, 2, 2))
    vectors[0, :, 0] = 4.0  # top row moves right
    mask = np.array([[True, True], [False, False]])
    flow = FlowField(vectors, (0, 1))
    assert mean_background_offset(flow, mask, "background_count", "foreground").dx == pytest.approx(4.0)
    assert mean_background_offset(flow, mask, "background_count", "background").dx == pytest.approx(0.0)
    assert mean_background_offset(flow, mask, "background_count", "global").dx == pytest.approx(2.0)


def test_empty_background_count_is_zero():
    flow = FlowField.uniform((3, 3), 1.0, 1.0, pair=(0, 1))
    offset = mean_background_offset(flow, np.ones((3, 3), dtype=bool), "background_count")
    assert (offset.dx, offset.dy) == (0.0, 0.0)


def test_mask_size_must_match():
    flow = FlowField.uniform((3, 3), 1.0, 1.0, pair=(0, 1))
    with pytest.raises(InputError):
        mean_background_offset(flow, np.zeros((4, 4), dtype=bool))


def test_unknown_mode_rejected():
    flow = FlowField.uniform((3, 3), 1.0, 1.0, pair=(0, 1))
    with pytest.raises(InputError):
        mean_background_offset(flow, np.zeros((3, 3), dtype=bool), "median")


def test_first_frame_offset():
    assert zero_offset(0).as_array().tolist() == [0.0, 0.0]
