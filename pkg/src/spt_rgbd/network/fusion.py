from __future__ import annotations

import torch
from torch import nn

from spt_rgbd.network.config import FUSION_VARIANTS
from spt_rgbd.network.transformer import Encoder


class FusionModule(nn.Module):
    """Combine RGB and depth token sequences.

    A: channel concat then a 1-d (kernel 1) convolution from 2C to C.
    B: A followed by a fusion encoder.
    C: A plus the RGB tokens.
    D: B plus the RGB tokens.

    All variants share the same projection and encoder parameters, so a single
    module can be evaluated under any variant.
    """

    def __init__(self, channels: int, n_layers: int, heads: int, ffn_dim: int, dropout: float = 0.0,
                 variant: str = "B"):
        super().__init__()
        self.variant = variant
        self.proj = nn.Conv1d(2 * channels, channels, kernel_size=1)
        self.encoder = Encoder(n_layers, channels, heads, ffn_dim, dropout)

    def project(self, rgb: torch.Tensor, depth: torch.Tensor) -> torch.Tensor:
        x = torch.cat((rgb, depth), dim=-1)  # (B, L, 2C)
        return self.proj(x.transpose(1, 2)).transpose(1, 2)

    def forward(self, rgb: torch.Tensor, depth: torch.Tensor, variant: str | None = None) -> torch.Tensor:
        variant = variant or self.variant
        if variant not in FUSION_VARIANTS:
            raise ValueError(f"unknown fusion variant {variant!r}")
        if rgb.shape != depth.shape:
            raise ValueError(f"rgb tokens {tuple(rgb.shape)} and depth tokens {tuple(depth.shape)} differ")
        x = self.project(rgb, depth)
        if variant in ("B", "D"):
            x = self.encoder(x)
        if variant in ("C", "D"):
            x = x + rgb
        return x
