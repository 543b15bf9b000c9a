"""Config-driven training runs (``spt-rgbd train``) and the small-scale overfit experiment."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import torch

from spt_rgbd import dataset_io, synth
from spt_rgbd.network.checkpoint import save_checkpoint
from spt_rgbd.network.config import NetConfig
from spt_rgbd.network.loss import iou_xywh
from spt_rgbd.network.model import SPT
from spt_rgbd.network.train import Batch, batch_loss, fit, make_optimizer, recalibrate_batchnorm
from spt_rgbd.pairs import sample_pairs

log = logging.getLogger(__name__)


def net_config_from_dict(d: dict) -> NetConfig:
    d = dict(d)
    profile = d.pop("profile", "toy")
    if profile == "toy":
        return NetConfig.toy(**d)
    return NetConfig.full(**d)


@dataclass
class OverfitResult:
    losses: list[float]
    mean_iou: float
    final_loss: float
    model: SPT

    @property
    def loss_decrease(self) -> float:
        return 1.0 - self.final_loss / self.losses[0]


@torch.no_grad()
def evaluate_pairs(model: SPT, batch: Batch) -> tuple[float, float]:
    """(mean loss, mean IoU) in eval mode."""
    model.eval()
    loss, out = batch_loss(model, batch)
    return float(loss), float(iou_xywh(out["box"], batch.boxes).mean())


def overfit(cfg: NetConfig, batch: Batch, steps: int, minibatch: int | None = None, seed: int = 0,
            log_every: int = 0) -> OverfitResult:
    torch.manual_seed(seed)
    model = SPT(cfg).to(batch.boxes.dtype)
    losses = fit(model, batch, steps, make_optimizer(model), minibatch=minibatch, seed=seed,
                 log_every=log_every, log=log.info)
    recalibrate_batchnorm(model, batch)
    final_loss, mean_iou = evaluate_pairs(model, batch)
    return OverfitResult(losses, mean_iou, final_loss, model)


def overfit_experiment(channels: int = 64, n_pairs: int = 20, steps: int = 500, seed: int = 0,
                       log_every: int = 0) -> OverfitResult:
    """Toy SPT fitted to ``n_pairs`` synthetic template/search pairs."""
    seqs = [synth.generate_sequence(synth.random_config(seed + s, n_frames=40))[0] for s in range(5)]
    cfg = NetConfig.toy(channels, heads=4, lr=1e-3)
    batch = sample_pairs(seqs, n_pairs, cfg, seed=seed)
    return overfit(cfg, batch, steps, seed=seed, log_every=log_every)


def _training_sequences(data: dict):
    if "root" in data:
        return dataset_io.load_dataset(data["root"], data.get("split", "train"))
    rnd = data.get("random", {"count": 5, "seed": 0, "n_frames": 40})
    return [
        synth.generate_sequence(synth.random_config(int(rnd.get("seed", 0)) + i,
                                                    n_frames=int(rnd.get("n_frames", 40))))[0]
        for i in range(int(rnd.get("count", 5)))
    ]


def run_training_config(path: str | Path) -> dict:
    """Train from a JSON config and write a checkpoint.

    Keys: ``net`` (NetConfig fields plus ``profile``), ``data`` (``{"root", "split"}``
    or ``{"random": {...}}``), ``pairs``, ``steps``, ``minibatch``, ``seed``, ``checkpoint``.
    """
    path = Path(path)
    conf = json.loads(path.read_text())
    cfg = net_config_from_dict(conf.get("net", {}))
    seed = int(conf.get("seed", 0))
    seqs = _training_sequences(conf.get("data", {}))
    batch = sample_pairs(seqs, int(conf.get("pairs", 20)), cfg, seed=seed)
    result = overfit(cfg, batch, int(conf.get("steps", 500)), conf.get("minibatch"), seed,
                     log_every=int(conf.get("log_every", 50)))
    ckpt = Path(conf.get("checkpoint", path.with_suffix(".npz")))
    if not ckpt.is_absolute():
        ckpt = path.parent / ckpt
    save_checkpoint(result.model, ckpt, extra={"steps": len(result.losses), "final_loss": result.final_loss})
    return {
        "steps": len(result.losses),
        "initial_loss": result.losses[0],
        "final_loss": result.final_loss,
        "mean_iou": result.mean_iou,
        "checkpoint": str(ckpt),
    }
