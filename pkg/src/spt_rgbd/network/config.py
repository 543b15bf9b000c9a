from __future__ import annotations

import dataclasses
from dataclasses import dataclass

STRIDE = 16
FULL_LAYERS = {"encoder_layers": 6, "fusion_layers": 2, "decoder_layers": 6}
FUSION_VARIANTS = ("A", "B", "C", "D")


class ConfigError(ValueError):
    pass


@dataclass
class NetConfig:
    """Architecture and optimisation settings.

    ``profile="full"`` pins the 6/2/6 layer counts; ``"toy"`` lets every size be overridden.
    Grids are derived from crop sizes: ``search_grid = search_size // 16``.
    """

    profile: str = "full"
    channels: int = 256
    heads: int = 8
    ffn_dim: int = 2048
    template_size: int = 128
    search_size: int = 320
    encoder_layers: int = 6
    fusion_layers: int = 2
    decoder_layers: int = 6
    backbone: str = "resnet50"  # or "tiny"
    head_channels: int = 256
    dropout: float = 0.1
    fusion: str = "B"
    positional: bool = True
    lambda_iou: float = 2.0
    lambda_l1: float = 5.0
    giou: bool = False
    lr: float = 1e-5
    weight_decay: float = 1e-4
    grad_clip: float = 0.1
    seed: int = 0

    def __post_init__(self):
        self.validate()

    @classmethod
    def full(cls, **overrides) -> "NetConfig":
        return cls(profile="full", **overrides)

    @classmethod
    def toy(cls, channels: int = 8, **overrides) -> "NetConfig":
        base = dict(
            profile="toy",
            channels=channels,
            heads=1,
            ffn_dim=2 * channels,
            template_size=64,
            search_size=128,
            encoder_layers=1,
            fusion_layers=1,
            decoder_layers=1,
            backbone="tiny",
            head_channels=channels,
            dropout=0.0,
            lr=1e-3,
            grad_clip=0.0,
        )
        base.update(overrides)
        return cls(**base)

    def replace(self, **changes) -> "NetConfig":
        return dataclasses.replace(self, **changes)

    def validate(self):
        if self.profile not in ("full", "toy"):
            raise ConfigError(f"unknown profile {self.profile!r}")
        if self.profile == "full":
            for k, v in FULL_LAYERS.items():
                if getattr(self, k) != v:
                    raise ConfigError(f"full profile fixes {k}={v}; use the toy profile to change it")
        if self.channels <= 0 or self.heads <= 0 or self.channels % self.heads:
            raise ConfigError(f"channels ({self.channels}) must be a positive multiple of heads ({self.heads})")
        if self.channels % 4:
            raise ConfigError("channels must be divisible by 4 for the 2-D sinusoidal embedding")
        for name in ("template_size", "search_size"):
            v = getattr(self, name)
            if v <= 0 or v % STRIDE:
                raise ConfigError(f"{name}={v} must be a positive multiple of {STRIDE}")
        if self.backbone not in ("tiny", "resnet50"):
            raise ConfigError(f"unknown backbone {self.backbone!r}")
        if self.fusion not in FUSION_VARIANTS:
            raise ConfigError(f"fusion variant must be one of {FUSION_VARIANTS}")
        for name in ("encoder_layers", "fusion_layers", "decoder_layers"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative")

    @property
    def template_grid(self) -> int:
        return self.template_size // STRIDE

    @property
    def search_grid(self) -> int:
        return self.search_size // STRIDE

    @property
    def template_tokens(self) -> int:
        return self.template_grid ** 2

    @property
    def search_tokens(self) -> int:
        return self.search_grid ** 2

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown NetConfig keys {sorted(unknown)}")
        return cls(**d)
