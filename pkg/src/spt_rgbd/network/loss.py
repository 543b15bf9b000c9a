from __future__ import annotations

import torch

from spt_rgbd.core import BoundingBox


def _xyxy(b: torch.Tensor) -> tuple[torch.Tensor, ...]:
    return b[:, 0], b[:, 1], b[:, 0] + b[:, 2], b[:, 1] + b[:, 3]


def iou_xywh(pred: torch.Tensor, gt: torch.Tensor, generalized: bool = False) -> torch.Tensor:
    """Per-row IoU (or GIoU) of (N, 4) boxes in (x, y, w, h); negative extents count as empty."""
    px1, py1, px2, py2 = _xyxy(pred)
    gx1, gy1, gx2, gy2 = _xyxy(gt)
    iw = (torch.minimum(px2, gx2) - torch.maximum(px1, gx1)).clamp(min=0)
    ih = (torch.minimum(py2, gy2) - torch.maximum(py1, gy1)).clamp(min=0)
    inter = iw * ih
    area_p = (px2 - px1).clamp(min=0) * (py2 - py1).clamp(min=0)
    area_g = (gx2 - gx1).clamp(min=0) * (gy2 - gy1).clamp(min=0)
    union = (area_p + area_g - inter).clamp(min=1e-12)
    iou = inter / union
    if not generalized:
        return iou
    cw = torch.maximum(px2, gx2) - torch.minimum(px1, gx1)
    ch = torch.maximum(py2, gy2) - torch.minimum(py1, gy1)
    hull = (cw * ch).clamp(min=1e-12)
    return iou - (hull - union) / hull


def box_loss_tensor(
    pred: torch.Tensor,
    gt: torch.Tensor,
    lambda_iou: float = 2.0,
    lambda_l1: float = 5.0,
    generalized: bool = False,
) -> torch.Tensor:
    """Per-row ``lambda_iou * (1 - IoU) + lambda_l1 * mean|pred - gt|`` over (x, y, w, h)."""
    l_iou = 1.0 - iou_xywh(pred, gt, generalized)
    l1 = (pred - gt).abs().mean(dim=1)
    return lambda_iou * l_iou + lambda_l1 * l1


def box_loss(
    pred: BoundingBox,
    gt: BoundingBox,
    lambda_iou: float = 2.0,
    lambda_l1: float = 5.0,
    generalized: bool = False,
) -> float:
    p = torch.tensor([pred.as_tuple()], dtype=torch.float64)
    g = torch.tensor([gt.as_tuple()], dtype=torch.float64)
    return float(box_loss_tensor(p, g, lambda_iou, lambda_l1, generalized)[0])
