"""Tests for the mask branch: edge generator, prompts, decoder and memory attention."""

import math

import pytest
import torch
import torch.nn.functional as F

from src.backbone.encoder import FeaturePyramid
from src.core.errors import InputError
from src.core.layers import map_to_tokens, tokens_to_map
from src.maskbranch import (
    EdgeGenerator,
    GaborBank,
    GaborParams,
    MaskBranch,
    MaskDecoder,
    MaskMemoryBank,
    MaskMemoryEntry,
    MemoryAttention,
    PromptEncoder,
    TemporalEmbedding,
    attend_mask_memory,
    binarize,
    encode_prompts,
)

ORIENTATIONS = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)


def make_pyramid(frame_index=0, channels=16, c1=8, c2=8, grid=(2, 2), seed=0) -> FeaturePyramid:
    g = torch.Generator().manual_seed(seed)
    h, w = grid
    return FeaturePyramid(
        tokens=torch.randn(h * w, channels, generator=g),
        f2=torch.randn(c2, 2 * h, 2 * w, generator=g),
        f1=torch.randn(c1, 4 * h, 4 * w, generator=g),
        grid=grid,
        frame_index=frame_index,
    )


def make_generator(**kwargs) -> EdgeGenerator:
    torch.manual_seed(0)
    return EdgeGenerator(8, 4, 4, GaborBank.build(GaborParams(), ORIENTATIONS), **kwargs)


class TestEdgeGenerator:
    def test_shapes(self):
        generator = make_generator()
        f_mask = torch.randn(4, 8)
        edges, refined = generator(f_mask, (2, 2), torch.randn(4, 8, 8), torch.randn(4, 4, 4))
        assert edges.shape == (8, 8)
        assert refined.shape == (4, 8)

    def test_zero_features_give_bias_only(self):
        generator = make_generator(use_highres=False)
        edges, refined = generator(torch.zeros(4, 8), (2, 2), torch.randn(4, 8, 8), torch.randn(4, 4, 4))
        assert torch.allclose(edges, generator.head_out.bias.expand(8, 8))
        assert torch.equal(refined, torch.zeros(4, 8))

    def test_zero_features_and_maps_give_bias_only(self):
        generator = make_generator()
        edges, _ = generator(torch.zeros(4, 8), (2, 2), torch.zeros(4, 8, 8), torch.zeros(4, 4, 4))
        assert torch.allclose(edges, generator.head_out.bias.expand(8, 8))

    def test_refined_is_relu_times_filtered(self):
        generator = make_generator()
        f_mask = torch.randn(9, 8)
        _, refined = generator(f_mask, (3, 3), torch.randn(4, 12, 12), torch.randn(4, 6, 6))
        x = tokens_to_map(f_mask, (3, 3))
        weight = generator.lg_kernel.expand(8, 1, 7, 7)
        expected = map_to_tokens(torch.relu(x) * F.conv2d(x, weight, padding=3, groups=8))
        assert torch.allclose(refined, expected, atol=1e-6)

    def test_laplacian_ablation_gates_with_features(self):
        generator = make_generator(use_laplacian=False)
        f_mask = torch.randn(4, 8)
        _, refined = generator(f_mask, (2, 2), torch.randn(4, 8, 8), torch.randn(4, 4, 4))
        assert torch.allclose(refined, torch.relu(f_mask) * f_mask)

    def test_highres_ablation_changes_edges(self):
        full = make_generator()
        ablated = make_generator(use_highres=False)
        ablated.load_state_dict(full.state_dict())
        f_mask, f1, f2 = torch.randn(4, 8), torch.randn(4, 8, 8), torch.randn(4, 4, 4)
        edges_full, _ = full(f_mask, (2, 2), f1, f2)
        edges_ablated, _ = ablated(f_mask, (2, 2), f1, f2)
        assert not torch.allclose(edges_full, edges_ablated)

    def test_gradients_match_finite_differences(self):
        generator = make_generator().double()
        f1 = torch.randn(4, 8, 8, dtype=torch.float64)
        f2 = torch.randn(4, 4, 4, dtype=torch.float64)
        f_mask = torch.randn(4, 8, dtype=torch.float64, requires_grad=True)

        def outputs(x):
            return generator(x, (2, 2), f1, f2)

        assert torch.autograd.gradcheck(outputs, (f_mask,), eps=1e-6, atol=1e-5)


class TestPrompts:
    def test_edge_prompt_lands_on_coarse_grid(self):
        encoder = PromptEncoder(16)
        dense = encoder.encode_edges(torch.randn(32, 32), (8, 8))
        assert dense.shape == (16, 8, 8)

    def test_missing_edges_use_learned_token(self):
        encoder = PromptEncoder(16)
        dense = encoder.encode_edges(None, (2, 3))
        assert dense.shape == (16, 2, 3)
        assert torch.equal(dense[:, 1, 2], encoder.no_edge_embed)

    def test_low_score_uses_no_point_token(self):
        encoder = PromptEncoder(16)
        _, sparse = encode_prompts(encoder, None, torch.tensor([0.4, 0.6]), torch.tensor(0.2), (2, 2))
        assert torch.equal(sparse[0], encoder.no_point_embed)

    def test_distinct_points_give_distinct_tokens(self):
        encoder = PromptEncoder(16)
        a = encoder.encode_point(torch.tensor([0.1, 0.2]))
        b = encoder.encode_point(torch.tensor([0.8, 0.5]))
        assert a.shape == (1, 16)
        assert not torch.allclose(a, b)

    def test_point_enters_as_constant(self):
        encoder = PromptEncoder(16)
        point = torch.tensor([0.3, 0.7], requires_grad=True)
        _, sparse = encode_prompts(encoder, None, point, torch.tensor(0.9), (2, 2))
        sparse.sum().backward()
        assert point.grad is None


class TestMemoryAttention:
    def test_empty_bank_is_self_attention(self):
        torch.manual_seed(0)
        attention = MemoryAttention(16, 2, 1)
        tokens = torch.randn(4, 16)
        out = attend_mask_memory(attention, TemporalEmbedding(3, 16), tokens, (2, 2), 0, MaskMemoryBank(3))
        assert out.shape == (4, 16)
        assert torch.isfinite(out).all()

    def test_memory_changes_output(self):
        torch.manual_seed(0)
        attention = MemoryAttention(16, 2, 1)
        temporal = TemporalEmbedding(3, 16)
        tokens = torch.randn(4, 16)
        bank = MaskMemoryBank(3)
        empty = attend_mask_memory(attention, temporal, tokens, (2, 2), 1, bank)
        bank.push(MaskMemoryEntry(memory=torch.randn(4, 16), mask=torch.zeros(32, 32, dtype=torch.bool), frame_index=0))
        with_memory = attend_mask_memory(attention, temporal, tokens, (2, 2), 1, bank)
        assert not torch.allclose(empty, with_memory)

    def test_shape_mismatch_raises(self):
        attention = MemoryAttention(16, 2, 1)
        bank = MaskMemoryBank(3)
        bank.push(MaskMemoryEntry(memory=torch.randn(9, 16), mask=torch.zeros(32, 32, dtype=torch.bool), frame_index=0))
        with pytest.raises(InputError):
            attend_mask_memory(attention, TemporalEmbedding(3, 16), torch.randn(4, 16), (2, 2), 1, bank)

    def test_temporal_embedding_clamps_distance(self):
        temporal = TemporalEmbedding(3, 8)
        assert torch.equal(temporal(10), temporal(3))
        assert torch.equal(temporal(0), temporal(1))
        disabled = TemporalEmbedding(3, 8, enabled=False)
        assert torch.count_nonzero(disabled(2)) == 0


class TestMaskBranch:
    def test_output_shapes(self, tiny_config):
        torch.manual_seed(0)
        branch = MaskBranch(tiny_config).eval()
        with torch.no_grad():
            out = branch(make_pyramid(), MaskMemoryBank(2), output_size=(32, 32))
        assert out.logits.shape == (32, 32)
        assert out.mask.dtype == torch.bool
        assert out.edge_logits.shape == (8, 8)
        assert out.attention.shape == (2, 2)
        assert torch.allclose(out.attention.sum(), torch.tensor(1.0), atol=1e-5)

    def test_deterministic(self, tiny_config):
        torch.manual_seed(0)
        branch = MaskBranch(tiny_config).eval()
        pyramid = make_pyramid()
        with torch.no_grad():
            a = branch(pyramid, MaskMemoryBank(2), point=torch.tensor([0.5, 0.5]), score=torch.tensor(0.9))
            b = branch(pyramid, MaskMemoryBank(2), point=torch.tensor([0.5, 0.5]), score=torch.tensor(0.9))
        assert torch.equal(a.logits, b.logits)

    def test_edge_generator_ablation(self, tiny_config):
        config = tiny_config.replace(ablation__edge_generator=False)
        branch = MaskBranch(config).eval()
        with torch.no_grad():
            out = branch(make_pyramid(), MaskMemoryBank(2))
        assert out.edge_logits is None
        assert out.logits.shape == (32, 32)

    def test_memory_entry(self, tiny_config):
        branch = MaskBranch(tiny_config)
        pyramid = make_pyramid(frame_index=4)
        entry = branch.encode_memory(pyramid, torch.ones(32, 32))
        assert entry.memory.shape == (4, 16)
        assert entry.frame_index == 4
        assert entry.mask.dtype == torch.bool


class TestMaskDecoder:
    def test_gradients_match_finite_differences(self, tiny_config):
        m = tiny_config.model
        torch.manual_seed(0)
        decoder = MaskDecoder(m.channels, m.channels_f1, m.channels_f2, m.num_heads, m.decoder_depth).double()
        g = torch.Generator().manual_seed(1)

        def rand(*shape, grad=True):
            return torch.randn(*shape, generator=g, dtype=torch.float64).requires_grad_(grad)

        features = rand(4, m.channels)
        dense = rand(m.channels, 2, 2)
        sparse = rand(1, m.channels)
        f1 = rand(m.channels_f1, 8, 8)
        f2 = rand(m.channels_f2, 4, 4)
        pe = rand(4, m.channels, grad=False)

        def outputs(features, dense, sparse, f1, f2):
            return decoder(features, (2, 2), dense, sparse, pe, f1, f2, output_size=(8, 8))

        assert torch.autograd.gradcheck(outputs, (features, dense, sparse, f1, f2), eps=1e-6, atol=1e-5)

    def test_output_matches_input_size(self, tiny_config):
        m = tiny_config.model
        decoder = MaskDecoder(m.channels, m.channels_f1, m.channels_f2, m.num_heads, m.decoder_depth)
        logits, attention = decoder(
            torch.randn(4, 16), (2, 2), torch.randn(16, 2, 2), torch.randn(1, 16), torch.randn(4, 16),
            torch.randn(8, 8, 8), torch.randn(8, 4, 4), output_size=(30, 20),
        )
        assert logits.shape == (30, 20)
        assert attention.shape == (2, 2)
        assert torch.equal(binarize(logits), torch.sigmoid(logits) > 0.5)
