"""SPT: RGB and depth transformer streams, fusion module, query decoder, corner head."""

from spt_rgbd.network.config import FUSION_VARIANTS, STRIDE, ConfigError, NetConfig
from spt_rgbd.network.head import soft_argmax
from spt_rgbd.network.loss import box_loss, box_loss_tensor
from spt_rgbd.network.model import SPT
from spt_rgbd.network.train import Batch, TrainingError, make_optimizer, training_step

__all__ = [
    "FUSION_VARIANTS",
    "STRIDE",
    "Batch",
    "ConfigError",
    "NetConfig",
    "SPT",
    "TrainingError",
    "box_loss",
    "box_loss_tensor",
    "make_optimizer",
    "soft_argmax",
    "training_step",
]
