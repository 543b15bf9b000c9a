from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from spt_rgbd.network.config import NetConfig
from spt_rgbd.network.loss import box_loss_tensor
from spt_rgbd.network.model import SPT


class TrainingError(RuntimeError):
    pass


@dataclass
class Batch:
    """Template/search crops for both modalities plus ground truth normalised to the search crop."""

    template_rgb: torch.Tensor  # (B, 3, t, t), 0..255
    template_depth: torch.Tensor  # (B, 1, t, t), mm
    search_rgb: torch.Tensor  # (B, 3, s, s)
    search_depth: torch.Tensor  # (B, 1, s, s)
    boxes: torch.Tensor  # (B, 4) x, y, w, h in [0, 1]

    def __len__(self) -> int:
        return self.boxes.shape[0]

    def to(self, dtype: torch.dtype) -> "Batch":
        return Batch(*(t.to(dtype) for t in (self.template_rgb, self.template_depth, self.search_rgb,
                                              self.search_depth, self.boxes)))

    def subset(self, idx) -> "Batch":
        return Batch(self.template_rgb[idx], self.template_depth[idx], self.search_rgb[idx],
                     self.search_depth[idx], self.boxes[idx])


def make_optimizer(model: SPT, lr: float | None = None) -> torch.optim.Optimizer:
    cfg = model.cfg
    return torch.optim.AdamW(model.parameters(), lr=cfg.lr if lr is None else lr, weight_decay=cfg.weight_decay)


def batch_loss(model: SPT, batch: Batch) -> tuple[torch.Tensor, dict]:
    cfg = model.cfg
    out = model(batch.template_rgb, batch.template_depth, batch.search_rgb, batch.search_depth)
    loss = box_loss_tensor(out["box"], batch.boxes, cfg.lambda_iou, cfg.lambda_l1, cfg.giou).mean()
    return loss, out


def training_step(model: SPT, optimizer: torch.optim.Optimizer, batch: Batch) -> float:
    """One gradient update; returns the loss measured before the update."""
    if len(batch) == 0:
        raise TrainingError("empty batch")
    model.train()
    optimizer.zero_grad(set_to_none=True)
    loss, out = batch_loss(model, batch)
    value = float(loss.detach())
    if not math.isfinite(value):
        raise TrainingError(
            f"non-finite loss {value}; predicted boxes {out['box'].detach()[:4].tolist()}, "
            f"targets {batch.boxes[:4].tolist()}"
        )
    loss.backward()
    if model.cfg.grad_clip > 0:
        torch.nn.utils.clip_grad_norm_(model.parameters(), model.cfg.grad_clip)
    optimizer.step()
    return value


def fit(model: SPT, batch: Batch, steps: int, optimizer=None, minibatch: int | None = None,
        seed: int = 0, log_every: int = 0, log=print) -> list[float]:
    """Repeated ``training_step`` over (random minibatches of) a fixed set of pairs."""
    optimizer = optimizer or make_optimizer(model)
    gen = torch.Generator().manual_seed(seed)
    losses = []
    for step in range(steps):
        if minibatch and minibatch < len(batch):
            idx = torch.randperm(len(batch), generator=gen)[:minibatch]
            b = batch.subset(idx)
        else:
            b = batch
        losses.append(training_step(model, optimizer, b))
        if log_every and (step % log_every == 0 or step == steps - 1):
            log(f"step {step:4d} loss {losses[-1]:.4f}")
    return losses


def new_model(cfg: NetConfig) -> SPT:
    return SPT(cfg)


@torch.no_grad()
def recalibrate_batchnorm(model: SPT, batch: Batch, chunk: int = 32):
    """Replace BatchNorm running statistics with exact averages over ``batch``.

    Running averages lag behind fast-changing weights; recomputing them once after
    training makes eval-mode outputs match what was optimised.
    """
    bns = [m for m in model.modules() if isinstance(m, torch.nn.modules.batchnorm._BatchNorm)]
    saved = [m.momentum for m in bns]
    for m in bns:
        m.reset_running_stats()
        m.momentum = None  # cumulative average
    model.train()
    for start in range(0, len(batch), chunk):
        b = batch.subset(slice(start, start + chunk))
        model(b.template_rgb, b.template_depth, b.search_rgb, b.search_depth)
    for m, mom in zip(bns, saved):
        m.momentum = mom
    model.eval()
