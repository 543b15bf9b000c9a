"""Attention stacks: multi-head attention, post-norm encoder/decoder layers, sine embeddings."""

from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn


def sine_embedding_2d(h: int, w: int, channels: int, temperature: float = 10000.0) -> torch.Tensor:
    """Fixed 2-D sinusoidal embedding, (h*w, channels), row-major like ``flatten``.

    Half the channels encode the row, half the column; coordinates are normalised
    to (0, 2*pi] so grids of different size share a scale.
    """
    npf = channels // 2
    ys = torch.arange(1, h + 1, dtype=torch.float64) / h * 2 * math.pi
    xs = torch.arange(1, w + 1, dtype=torch.float64) / w * 2 * math.pi
    dim_t = temperature ** (2 * (torch.arange(npf, dtype=torch.float64) // 2) / npf)

    def encode(v):
        p = v[:, None] / dim_t
        return torch.stack((p[:, 0::2].sin(), p[:, 1::2].cos()), dim=2).flatten(1)

    pos_y = encode(ys)[:, None, :].expand(h, w, npf)
    pos_x = encode(xs)[None, :, :].expand(h, w, npf)
    return torch.cat((pos_y, pos_x), dim=2).reshape(h * w, channels)


class MultiHeadAttention(nn.Module):
    def __init__(self, channels: int, heads: int, dropout: float = 0.0):
        super().__init__()
        assert channels % heads == 0
        self.heads = heads
        self.head_dim = channels // heads
        self.q_proj = nn.Linear(channels, channels)
        self.k_proj = nn.Linear(channels, channels)
        self.v_proj = nn.Linear(channels, channels)
        self.out_proj = nn.Linear(channels, channels)
        self.dropout = nn.Dropout(dropout)

    def _split(self, x):
        b, n, _ = x.shape
        return x.view(b, n, self.heads, self.head_dim).transpose(1, 2)

    def forward(self, query, key, value, return_weights: bool = False):
        q = self._split(self.q_proj(query))
        k = self._split(self.k_proj(key))
        v = self._split(self.v_proj(value))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        weights = self.dropout(F.softmax(scores, dim=-1))
        out = (weights @ v).transpose(1, 2).reshape(query.shape[0], query.shape[1], -1)
        out = self.out_proj(out)
        return (out, weights) if return_weights else out


class FeedForward(nn.Sequential):
    def __init__(self, channels: int, hidden: int, dropout: float = 0.0):
        super().__init__(
            nn.Linear(channels, hidden),
            nn.ReLU(),
            nn.Dropout(dropout),
            nn.Linear(hidden, channels),
        )


class EncoderLayer(nn.Module):
    def __init__(self, channels: int, heads: int, ffn_dim: int, dropout: float = 0.0):
        super().__init__()
        self.self_attn = MultiHeadAttention(channels, heads, dropout)
        self.ffn = FeedForward(channels, ffn_dim, dropout)
        self.norm1 = nn.LayerNorm(channels)
        self.norm2 = nn.LayerNorm(channels)
        self.drop = nn.Dropout(dropout)

    def forward(self, x):
        x = self.norm1(x + self.drop(self.self_attn(x, x, x)))
        return self.norm2(x + self.drop(self.ffn(x)))


class Encoder(nn.Module):
    def __init__(self, n_layers: int, channels: int, heads: int, ffn_dim: int, dropout: float = 0.0):
        super().__init__()
        self.layers = nn.ModuleList(EncoderLayer(channels, heads, ffn_dim, dropout) for _ in range(n_layers))

    def forward(self, x):
        for layer in self.layers:
            x = layer(x)
        return x


class DecoderLayer(nn.Module):
    def __init__(self, channels: int, heads: int, ffn_dim: int, dropout: float = 0.0):
        super().__init__()
        self.self_attn = MultiHeadAttention(channels, heads, dropout)
        self.cross_attn = MultiHeadAttention(channels, heads, dropout)
        self.ffn = FeedForward(channels, ffn_dim, dropout)
        self.norm1 = nn.LayerNorm(channels)
        self.norm2 = nn.LayerNorm(channels)
        self.norm3 = nn.LayerNorm(channels)
        self.drop = nn.Dropout(dropout)

    def forward(self, tgt, memory):
        tgt = self.norm1(tgt + self.drop(self.self_attn(tgt, tgt, tgt)))
        tgt = self.norm2(tgt + self.drop(self.cross_attn(tgt, memory, memory)))
        return self.norm3(tgt + self.drop(self.ffn(tgt)))


class QueryDecoder(nn.Module):
    """One learnable target query attending over the fused tokens."""

    def __init__(self, n_layers: int, channels: int, heads: int, ffn_dim: int, dropout: float = 0.0):
        super().__init__()
        self.query = nn.Parameter(torch.randn(1, 1, channels) * 0.02)
        self.layers = nn.ModuleList(DecoderLayer(channels, heads, ffn_dim, dropout) for _ in range(n_layers))

    def forward(self, memory):
        tgt = self.query.expand(memory.shape[0], -1, -1)
        for layer in self.layers:
            tgt = layer(tgt, memory)
        return tgt  # (B, 1, C)
