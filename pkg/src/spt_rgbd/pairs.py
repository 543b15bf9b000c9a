"""Template/search training pairs cut from sequences with the tracker's own crop geometry."""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch

from spt_rgbd.core import BoundingBox, SequenceRecord, box_center, is_present
from spt_rgbd.network.config import NetConfig
from spt_rgbd.network.train import Batch
from spt_rgbd.tracker import SEARCH_FACTOR, TEMPLATE_FACTOR, crop_side, crop_square


def sample_pairs(
    sequences: Sequence[SequenceRecord],
    n_pairs: int,
    cfg: NetConfig,
    seed: int = 0,
    center_jitter: float = 0.5,
    scale_jitter: float = 0.15,
    template_factor: float = TEMPLATE_FACTOR,
    search_factor: float = SEARCH_FACTOR,
    dtype: torch.dtype = torch.float32,
) -> Batch:
    """Template from the first frame, search region from a random visible frame.

    The search crop is centred on the target moved by up to ``center_jitter``
    target sizes and scaled by ``exp(U(-scale_jitter, scale_jitter))`` so the
    target is not always in the middle.
    """
    rng = np.random.default_rng(seed)
    trgb, tdep, srgb, sdep, boxes = [], [], [], [], []
    while len(boxes) < n_pairs:
        seq = sequences[int(rng.integers(len(sequences)))]
        first = seq.groundtruth[0]
        visible = [t for t, g in enumerate(seq.groundtruth) if is_present(g)]
        if not is_present(first) or not visible:
            continue
        t = int(rng.choice(visible))
        gt: BoundingBox = seq.groundtruth[t]

        side_t = crop_side(first, template_factor)
        c_rgb, _ = crop_square(seq.rgb(0), box_center(first), side_t, cfg.template_size)
        c_dep, _ = crop_square(seq.depth(0), box_center(first), side_t, cfg.template_size)

        size = np.sqrt(gt.w * gt.h)
        cx, cy = box_center(gt)
        cx += rng.uniform(-center_jitter, center_jitter) * size
        cy += rng.uniform(-center_jitter, center_jitter) * size
        side_s = crop_side(gt, search_factor) * float(np.exp(rng.uniform(-scale_jitter, scale_jitter)))
        s_rgb, tr = crop_square(seq.rgb(t), (cx, cy), side_s, cfg.search_size)
        s_dep, _ = crop_square(seq.depth(t), (cx, cy), side_s, cfg.search_size)

        trgb.append(c_rgb.transpose(2, 0, 1))
        tdep.append(c_dep[None])
        srgb.append(s_rgb.transpose(2, 0, 1))
        sdep.append(s_dep[None])
        boxes.append(tr.image_box_to_unit(gt))

    def stack(xs):
        return torch.from_numpy(np.stack(xs).astype(np.float64)).to(dtype)

    return Batch(stack(trgb), stack(tdep), stack(srgb), stack(sdep),
                 torch.tensor(boxes, dtype=torch.float64).to(dtype))
