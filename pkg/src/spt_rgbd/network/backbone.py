from __future__ import annotations

import torch
from torch import nn
from torchvision.ops import FrozenBatchNorm2d

from spt_rgbd.network.config import STRIDE, NetConfig

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)


def conv_bn_relu(cin: int, cout: int, kernel: int = 3, stride: int = 1) -> nn.Sequential:
    # frozen BN: template and search crops go through the backbone in separate calls,
    # so batch statistics would differ between them and from any running average
    return nn.Sequential(
        nn.Conv2d(cin, cout, kernel, stride=stride, padding=kernel // 2, bias=False),
        FrozenBatchNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class TinyBackbone(nn.Module):
    """Four stride-2 conv blocks: net stride 16, ``channels`` outputs."""

    def __init__(self, channels: int):
        super().__init__()
        widths = (16, 32, 64, channels)
        blocks, cin = [], 3
        for w in widths:
            blocks.append(conv_bn_relu(cin, w, 3, stride=2))
            cin = w
        self.body = nn.Sequential(*blocks)

    def forward(self, x):
        return self.body(x)


class ResNet50Trunk(nn.Module):
    """ResNet-50 without its last stage and classifier (stride 16, 1024 channels), then a 1x1 projection."""

    def __init__(self, channels: int):
        super().__init__()
        from torchvision.models import resnet50

        net = resnet50(weights=None, norm_layer=FrozenBatchNorm2d)
        self.body = nn.Sequential(
            net.conv1, net.bn1, net.relu, net.maxpool, net.layer1, net.layer2, net.layer3
        )
        self.proj = nn.Conv2d(1024, channels, kernel_size=1)

    def forward(self, x):
        return self.proj(self.body(x))


def build_backbone(cfg: NetConfig) -> nn.Module:
    if cfg.backbone == "tiny":
        return TinyBackbone(cfg.channels)
    return ResNet50Trunk(cfg.channels)


def normalize_rgb(rgb: torch.Tensor) -> torch.Tensor:
    """(B, 3, H, W) in [0, 255] -> ImageNet-standardised."""
    mean = rgb.new_tensor(IMAGENET_MEAN).view(1, 3, 1, 1)
    std = rgb.new_tensor(IMAGENET_STD).view(1, 3, 1, 1)
    return (rgb / 255.0 - mean) / std


def normalize_depth(depth: torch.Tensor) -> torch.Tensor:
    """(B, 1, H, W) depth -> per-crop min-max scaled to [0, 1], replicated to 3 channels."""
    if depth.shape[1] != 1:
        raise ValueError(f"depth input must have one channel, got {depth.shape[1]}")
    flat = depth.flatten(1)
    lo = flat.min(dim=1).values.view(-1, 1, 1, 1)
    hi = flat.max(dim=1).values.view(-1, 1, 1, 1)
    scaled = (depth - lo) / (hi - lo).clamp_min(1e-6)
    return scaled.expand(-1, 3, -1, -1)


def extract_features(backbone: nn.Module, image: torch.Tensor, channels: int) -> torch.Tensor:
    """Backbone features for a preprocessed (B, 3, H, W) image; H and W must be multiples of 16."""
    h, w = image.shape[-2:]
    if h % STRIDE or w % STRIDE:
        raise ValueError(f"image size {h}x{w} is not divisible by the backbone stride {STRIDE}")
    feats = backbone(image)
    expected = (image.shape[0], channels, h // STRIDE, w // STRIDE)
    if tuple(feats.shape) != expected:
        raise RuntimeError(f"backbone produced {tuple(feats.shape)}, expected {expected}")
    return feats
