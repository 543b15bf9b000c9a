from __future__ import annotations

import torch
import torch.nn.functional as F
from torch import nn


def _branch(cin: int, width: int) -> nn.Sequential:
    # four Conv-BN-ReLU blocks narrowing the width, then a 1x1 conv to a logit map;
    # a rectified last layer would clamp negative logits before the softmax
    widths = [width, max(width // 2, 1), max(width // 4, 1), max(width // 8, 1)]
    layers, c = [], cin
    for w in widths:
        layers += [nn.Conv2d(c, w, 3, padding=1), nn.BatchNorm2d(w), nn.ReLU()]
        c = w
    layers.append(nn.Conv2d(c, 1, kernel_size=1))
    return nn.Sequential(*layers)


class CornerHead(nn.Module):
    """Similarity-enhanced search features -> normalised top-left / bottom-right corner maps."""

    def __init__(self, channels: int, head_channels: int, grid: int):
        super().__init__()
        self.grid = grid
        self.tl = _branch(channels, head_channels)
        self.br = _branch(channels, head_channels)

    def enhance(self, query: torch.Tensor, search_tokens: torch.Tensor) -> torch.Tensor:
        """Scale each search token by its dot-product similarity with the decoder output."""
        sim = search_tokens @ query.transpose(1, 2)  # (B, HW, 1)
        return search_tokens * sim

    def logits(self, query: torch.Tensor, search_tokens: torch.Tensor):
        b, n, c = search_tokens.shape
        if n != self.grid * self.grid:
            raise ValueError(f"expected {self.grid * self.grid} search tokens, got {n}")
        fmap = self.enhance(query, search_tokens).transpose(1, 2).reshape(b, c, self.grid, self.grid)
        return self.tl(fmap)[:, 0], self.br(fmap)[:, 0]

    def forward(self, query: torch.Tensor, search_tokens: torch.Tensor):
        tl, br = self.logits(query, search_tokens)
        return spatial_softmax(tl), spatial_softmax(br)


def spatial_softmax(logits: torch.Tensor) -> torch.Tensor:
    b, h, w = logits.shape
    return F.softmax(logits.reshape(b, h * w), dim=1).reshape(b, h, w)


def soft_argmax(prob: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Expected (x, y) grid index under a normalised (B, H, W) map."""
    _, h, w = prob.shape
    xs = torch.arange(w, dtype=prob.dtype, device=prob.device)
    ys = torch.arange(h, dtype=prob.dtype, device=prob.device)
    ex = (prob.sum(dim=1) * xs).sum(dim=1)
    ey = (prob.sum(dim=2) * ys).sum(dim=1)
    return ex, ey


def corners_from_heatmaps(p_tl: torch.Tensor, p_br: torch.Tensor) -> torch.Tensor:
    """(B, 4) grid coordinates (x_tl, y_tl, x_br, y_br)."""
    x1, y1 = soft_argmax(p_tl)
    x2, y2 = soft_argmax(p_br)
    return torch.stack((x1, y1, x2, y2), dim=1)


def grid_to_unit(corners: torch.Tensor, grid: int) -> torch.Tensor:
    """Grid indices -> crop-normalised [0, 1] coordinates; index i is the centre of cell i."""
    return (corners + 0.5) / grid


def unit_to_grid(coords: torch.Tensor, grid: int) -> torch.Tensor:
    return coords * grid - 0.5


def corners_to_xywh(c: torch.Tensor) -> torch.Tensor:
    return torch.stack((c[:, 0], c[:, 1], c[:, 2] - c[:, 0], c[:, 3] - c[:, 1]), dim=1)
