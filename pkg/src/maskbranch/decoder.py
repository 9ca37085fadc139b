"""Two-way attention mask decoder with high-resolution skip fusion."""

from typing import Optional

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from src.core.layers import MLP, LayerNorm2d, tokens_to_map


class TwoWayBlock(nn.Module):
    """Token self-attention, token-to-image, MLP, image-to-token (post-norm)."""

    def __init__(self, dim: int, num_heads: int, mlp_ratio: int = 4, skip_first_pe: bool = False):
        super().__init__()
        self.self_attn = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.norm1 = nn.LayerNorm(dim)
        self.token_to_image = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = MLP(dim, dim * mlp_ratio, dim)
        self.norm3 = nn.LayerNorm(dim)
        self.image_to_token = nn.MultiheadAttention(dim, num_heads, batch_first=True)
        self.norm4 = nn.LayerNorm(dim)
        self.skip_first_pe = skip_first_pe

    def forward(self, queries: Tensor, keys: Tensor, query_pe: Tensor, key_pe: Tensor) -> tuple[Tensor, Tensor]:
        if self.skip_first_pe:
            queries = self.self_attn(queries, queries, queries, need_weights=False)[0]
        else:
            q = queries + query_pe
            queries = queries + self.self_attn(q, q, queries, need_weights=False)[0]
        queries = self.norm1(queries)

        q = queries + query_pe
        k = keys + key_pe
        queries = self.norm2(queries + self.token_to_image(q, k, keys, need_weights=False)[0])
        queries = self.norm3(queries + self.mlp(queries))

        q = queries + query_pe
        k = keys + key_pe
        keys = self.norm4(keys + self.image_to_token(k, q, queries, need_weights=False)[0])
        return queries, keys


class MaskDecoder(nn.Module):
    """
    Decodes a bleed mask from prompted coarse features.

    The mask token and the sparse point prompt attend to the coarse image
    tokens (dense edge prompt added); the image map is upscaled x2 twice with
    F2 and F1 skips, and a hypernetwork on the mask token produces stride-4
    logits that are bilinearly resized to the input resolution.
    """

    def __init__(self, channels: int, channels_f1: int, channels_f2: int, num_heads: int, depth: int):
        super().__init__()
        self.mask_token = nn.Parameter(torch.randn(1, channels) * 0.02)
        self.blocks = nn.ModuleList(
            TwoWayBlock(channels, num_heads, skip_first_pe=(i == 0)) for i in range(depth)
        )
        self.final_attn = nn.MultiheadAttention(channels, num_heads, batch_first=True)
        self.final_norm = nn.LayerNorm(channels)

        up1 = max(channels // 4, 1)
        up2 = max(channels // 8, 1)
        self.upscale1 = nn.ConvTranspose2d(channels, up1, kernel_size=2, stride=2)
        self.skip2 = nn.Conv2d(channels_f2, up1, 1)
        self.upscale_norm = LayerNorm2d(up1)
        self.upscale2 = nn.ConvTranspose2d(up1, up2, kernel_size=2, stride=2)
        self.skip1 = nn.Conv2d(channels_f1, up2, 1)
        self.hyper = MLP(channels, channels, up2, num_layers=3)

    def forward(
        self,
        features: Tensor,
        grid: tuple[int, int],
        dense_prompt: Tensor,
        sparse_prompt: Tensor,
        dense_pe: Tensor,
        f1: Tensor,
        f2: Tensor,
        output_size: Optional[tuple[int, int]] = None,
    ) -> tuple[Tensor, Tensor]:
        """
        Args:
            features: (s, c) refined coarse tokens F'_mask
            dense_prompt: (c, h, w) E_p
            sparse_prompt: (n, c) P_p
            dense_pe: (s, c) positional encoding of the coarse grid
            output_size: defaults to 16x the coarse grid

        Returns:
            (mask logits of output_size, attention of the mask token over the grid (h, w))
        """
        height, width = grid
        image = (features + dense_prompt.flatten(1).transpose(0, 1)).unsqueeze(0)
        key_pe = dense_pe.unsqueeze(0)
        tokens = torch.cat([self.mask_token, sparse_prompt], dim=0).unsqueeze(0)
        queries = tokens

        for block in self.blocks:
            queries, image = block(queries, image, query_pe=tokens, key_pe=key_pe)
        attended, weights = self.final_attn(queries + tokens, image + key_pe, image, need_weights=True)
        queries = self.final_norm(queries + attended)

        x = tokens_to_map(image[0], grid)
        x = self.upscale1(x) + self.skip2(f2.unsqueeze(0))
        x = F.gelu(self.upscale_norm(x))
        x = F.gelu(self.upscale2(x) + self.skip1(f1.unsqueeze(0)))

        weights_out = self.hyper(queries[0, 0])  # (up2,)
        logits4 = torch.einsum("c,chw->hw", weights_out, x[0])

        size = output_size or (height * 16, width * 16)
        logits = F.interpolate(logits4[None, None], size=size, mode="bilinear", align_corners=False)[0, 0]
        attention = weights[0, 0].reshape(height, width)
        return logits, attention


def binarize(logits: Tensor) -> Tensor:
    """sigmoid(logits) > 0.5, i.e. logits > 0."""
    return torch.sigmoid(logits) > 0.5
