"""Edge generator: Gabor-Laplacian gating of mask features fused with high-res maps."""

import torch
import torch.nn.functional as F
from torch import Tensor, nn

from src.core.layers import map_to_tokens, tokens_to_map
from src.maskbranch.gabor import GaborBank, laplacian_of_gabor


class EdgeGenerator(nn.Module):
    """
    Produces a stride-4 edge logit map E_m and refined coarse features F'_mask.

    Every map x is gated as ReLU(x) * (L_g conv x). The coarse F_mask gives
    F'_mask directly. Two parallel paths upsample F_mask (x2, and x2 then x2),
    gate each result, then add the projected high-resolution map of the same
    stride (F2 at stride 8, F1 at stride 4). The stride-8 path is upsampled
    onto the stride-4 one before the head.
    """

    def __init__(
        self,
        channels: int,
        channels_f1: int,
        channels_f2: int,
        bank: GaborBank,
        use_laplacian: bool = True,
        use_highres: bool = True,
    ):
        super().__init__()
        kernels = torch.tensor(sum(laplacian_of_gabor(bank)), dtype=torch.float32)
        # responses summed over orientations == one conv with the summed kernel
        self.register_buffer("lg_kernel", kernels, persistent=False)
        self.use_laplacian = use_laplacian
        self.use_highres = use_highres
        self.channels = channels

        # bias-free so that zero inputs stay zero up to the head
        self.proj_f2 = nn.Conv2d(channels_f2, channels, 1, bias=False)
        self.proj_f1 = nn.Conv2d(channels_f1, channels, 1, bias=False)
        self.fuse8 = nn.Conv2d(channels, channels, 3, padding=1, bias=False)
        hidden = max(channels // 4, 1)
        self.head_hidden = nn.Conv2d(channels, hidden, 3, padding=1, bias=False)
        self.head_out = nn.Conv2d(hidden, 1, 1)

    def filter(self, x: Tensor) -> Tensor:
        """Depthwise L_g convolution of a (1, C, H, W) map, zero padded."""
        channels = x.shape[1]
        size = self.lg_kernel.shape[-1]
        weight = self.lg_kernel.to(x.dtype).expand(channels, 1, size, size)
        return F.conv2d(x, weight, padding=size // 2, groups=channels)

    def gate(self, x: Tensor) -> Tensor:
        """ReLU(x) * (L_g conv x); without the filter, ReLU(x) * x."""
        response = self.filter(x) if self.use_laplacian else x
        return F.relu(x) * response

    def forward(self, f_mask: Tensor, grid: tuple[int, int], f1: Tensor, f2: Tensor) -> tuple[Tensor, Tensor]:
        """
        Args:
            f_mask: (s, c) memory-attended mask tokens
            grid: coarse (h, w)
            f1, f2: (c1, 4h, 4w) and (c2, 2h, 2w) maps

        Returns:
            (E_m logits of shape (4h, 4w), F'_mask tokens (s, c))
        """
        x = tokens_to_map(f_mask, grid)
        u8 = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
        u4 = F.interpolate(u8, scale_factor=2, mode="bilinear", align_corners=False)

        g8 = self.gate(u8)
        g4 = self.gate(u4)
        if self.use_highres:
            g8 = g8 + self.proj_f2(f2.unsqueeze(0))
            g4 = g4 + self.proj_f1(f1.unsqueeze(0))

        fused = g4 + F.interpolate(self.fuse8(g8), scale_factor=2, mode="bilinear", align_corners=False)
        edge_logits = self.head_out(F.gelu(self.head_hidden(fused)))[0, 0]

        refined = map_to_tokens(self.gate(x))
        return edge_logits, refined
