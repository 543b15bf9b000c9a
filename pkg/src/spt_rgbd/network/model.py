"""The SPT network: two modality streams, fusion, query decoder, corner head."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from spt_rgbd.network.backbone import build_backbone, extract_features, normalize_depth, normalize_rgb
from spt_rgbd.network.config import NetConfig
from spt_rgbd.network.fusion import FusionModule
from spt_rgbd.network.head import CornerHead, corners_from_heatmaps, corners_to_xywh, grid_to_unit
from spt_rgbd.network.transformer import Encoder, QueryDecoder, sine_embedding_2d


@dataclass
class TokenLayout:
    template_tokens: int
    search_tokens: int

    @property
    def length(self) -> int:
        return self.template_tokens + self.search_tokens

    def search_block(self, tokens: torch.Tensor) -> torch.Tensor:
        if tokens.shape[1] != self.length:
            raise ValueError(f"token sequence length {tokens.shape[1]} does not match layout {self.length}")
        return tokens[:, self.template_tokens :]


class ModalityEncoder(nn.Module):
    """Flatten template and search grids, concatenate (template first), add sine embeddings, self-attend."""

    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        self.positional = cfg.positional
        self.encoder = Encoder(cfg.encoder_layers, cfg.channels, cfg.heads, cfg.ffn_dim, cfg.dropout)
        pos = torch.cat(
            (
                sine_embedding_2d(cfg.template_grid, cfg.template_grid, cfg.channels),
                sine_embedding_2d(cfg.search_grid, cfg.search_grid, cfg.channels),
            )
        )
        self.register_buffer("pos", pos.to(torch.get_default_dtype()), persistent=False)

    def flatten(self, template_feats: torch.Tensor, search_feats: torch.Tensor) -> torch.Tensor:
        t, s = self.cfg.template_grid, self.cfg.search_grid
        if template_feats.shape[-2:] != (t, t) or search_feats.shape[-2:] != (s, s):
            raise ValueError(
                f"feature grids {tuple(template_feats.shape[-2:])}/{tuple(search_feats.shape[-2:])} "
                f"do not match config {t}x{t}/{s}x{s}"
            )
        return torch.cat((template_feats.flatten(2), search_feats.flatten(2)), dim=2).transpose(1, 2)

    def encode_tokens(self, tokens: torch.Tensor) -> torch.Tensor:
        if self.positional:
            tokens = tokens + self.pos.to(tokens.dtype)
        return self.encoder(tokens)

    def forward(self, template_feats: torch.Tensor, search_feats: torch.Tensor) -> torch.Tensor:
        return self.encode_tokens(self.flatten(template_feats, search_feats))


class SPT(nn.Module):
    def __init__(self, cfg: NetConfig):
        super().__init__()
        self.cfg = cfg
        gen_state = torch.random.get_rng_state()
        torch.manual_seed(cfg.seed)
        try:
            self.backbone_rgb = build_backbone(cfg)
            self.backbone_depth = build_backbone(cfg)
            self.encoder_rgb = ModalityEncoder(cfg)
            self.encoder_depth = ModalityEncoder(cfg)
            self.fusion = FusionModule(
                cfg.channels, cfg.fusion_layers, cfg.heads, cfg.ffn_dim, cfg.dropout, variant=cfg.fusion
            )
            self.decoder = QueryDecoder(cfg.decoder_layers, cfg.channels, cfg.heads, cfg.ffn_dim, cfg.dropout)
            self.head = CornerHead(cfg.channels, cfg.head_channels, cfg.search_grid)
        finally:
            torch.random.set_rng_state(gen_state)
        if cfg.profile == "full":
            # both streams start from the same weights; they diverge in training
            self.backbone_depth.load_state_dict(self.backbone_rgb.state_dict())
            self.encoder_depth.load_state_dict(self.encoder_rgb.state_dict())
        self.layout = TokenLayout(cfg.template_tokens, cfg.search_tokens)

    # -- stages --------------------------------------------------------------------------

    def template_features(self, template_rgb: torch.Tensor, template_depth: torch.Tensor):
        return (
            extract_features(self.backbone_rgb, normalize_rgb(template_rgb), self.cfg.channels),
            extract_features(self.backbone_depth, normalize_depth(template_depth), self.cfg.channels),
        )

    def encode(self, template_feats, search_rgb: torch.Tensor, search_depth: torch.Tensor):
        t_rgb, t_depth = template_feats
        s_rgb = extract_features(self.backbone_rgb, normalize_rgb(search_rgb), self.cfg.channels)
        s_depth = extract_features(self.backbone_depth, normalize_depth(search_depth), self.cfg.channels)
        return self.encoder_rgb(t_rgb, s_rgb), self.encoder_depth(t_depth, s_depth)

    def decode(self, fused: torch.Tensor) -> torch.Tensor:
        return self.decoder(fused)

    def predict_heatmaps(self, query: torch.Tensor, fused: torch.Tensor):
        return self.head(query, self.layout.search_block(fused))

    def search_heatmaps(self, template_feats, search_rgb, search_depth, variant: str | None = None) -> dict:
        rgb_tokens, depth_tokens = self.encode(template_feats, search_rgb, search_depth)
        fused = self.fusion(rgb_tokens, depth_tokens, variant)
        query = self.decode(fused)
        p_tl, p_br = self.predict_heatmaps(query, fused)
        corners = corners_from_heatmaps(p_tl, p_br)
        return {
            "p_tl": p_tl,
            "p_br": p_br,
            "corners": corners,
            "box": corners_to_xywh(grid_to_unit(corners, self.cfg.search_grid)),
            "fused": fused,
            "query": query,
        }

    def forward(self, template_rgb, template_depth, search_rgb, search_depth, variant: str | None = None) -> dict:
        """Inputs: RGB (B, 3, S, S) in [0, 255], depth (B, 1, S, S) in mm.

        ``box`` in the output is (x, y, w, h) normalised to the search crop.
        """
        feats = self.template_features(template_rgb, template_depth)
        return self.search_heatmaps(feats, search_rgb, search_depth, variant)
