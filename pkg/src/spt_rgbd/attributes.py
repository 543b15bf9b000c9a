"""Per-frame attributes computed from boxes and depth maps (AC, DC, FM, SC, NaN)."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from spt_rgbd.core import (
    COMPUTED_ATTRIBUTES,
    MANUAL_ATTRIBUTES,
    AttributeId,
    AttributeTable,
    BoundingBox,
    GroundTruthEntry,
    box_area,
    box_center,
    is_present,
)

HALF_WINDOW = 10  # 21 consecutive frames centred on t
RATIO_THRESHOLD = 1.5  # AC, DC, SC fire on max/min strictly above this
FM_FRACTION = 0.3  # FM fires when the centre moves at least this fraction of the target size


def window(t: int, n: int) -> tuple[int, int]:
    """Inclusive frame range ``[lo, hi]`` around ``t``, clamped to the sequence."""
    if not 0 <= t < n:
        raise IndexError(f"frame {t} outside sequence of length {n}")
    return max(0, t - HALF_WINDOW), min(n - 1, t + HALF_WINDOW)


def _ratio_exceeds(values: Sequence[float]) -> bool:
    if len(values) < 2:
        return False
    return max(values) / min(values) > RATIO_THRESHOLD


def compute_ac(boxes: Sequence[GroundTruthEntry]) -> bool:
    return _ratio_exceeds([b.w / b.h for b in boxes if is_present(b)])


def compute_sc(boxes: Sequence[GroundTruthEntry]) -> bool:
    return _ratio_exceeds([box_area(b) for b in boxes if is_present(b)])


def box_pixel_region(b: BoundingBox, shape: tuple[int, int]) -> tuple[slice, slice]:
    """Rows/columns of pixels covered by ``b``, clipped to an image of ``shape`` (H, W)."""
    h, w = shape[:2]
    x0 = min(max(math.floor(b.x), 0), w)
    y0 = min(max(math.floor(b.y), 0), h)
    x1 = min(max(math.ceil(b.x + b.w), 0), w)
    y1 = min(max(math.ceil(b.y + b.h), 0), h)
    return slice(y0, y1), slice(x0, x1)


def target_depth_mean(depth: np.ndarray, box: GroundTruthEntry) -> float | None:
    """Mean of nonzero depth inside the box; ``None`` if there is no valid pixel."""
    if not is_present(box):
        return None
    rows, cols = box_pixel_region(box, depth.shape)
    patch = depth[rows, cols]
    valid = patch[patch > 0]
    if valid.size == 0:
        return None
    return float(valid.astype(np.float64).mean())


def compute_dc(depths: Sequence[np.ndarray], boxes: Sequence[GroundTruthEntry]) -> bool:
    means = [target_depth_mean(d, b) for d, b in zip(depths, boxes)]
    return _ratio_exceeds([m for m in means if m is not None])


def compute_fm(prev: GroundTruthEntry, cur: GroundTruthEntry) -> bool:
    if not (is_present(prev) and is_present(cur)):
        return False
    (px, py), (cx, cy) = box_center(prev), box_center(cur)
    size = math.sqrt(box_area(prev))
    return math.hypot(cx - px, cy - py) / size >= FM_FRACTION


def compute_sequence_attributes(
    boxes: Sequence[GroundTruthEntry],
    depth_means: Sequence[float | None] | None = None,
) -> dict[AttributeId, np.ndarray]:
    """AC/SC/FM per frame, plus DC when per-frame target depth means are given.

    Depth means are taken per frame rather than per window so each depth map is
    read once; see ``sequence_depth_means``.
    """
    n = len(boxes)
    out = {a: np.zeros(n, dtype=bool) for a in (AttributeId.AC, AttributeId.SC, AttributeId.FM)}
    if depth_means is not None:
        if len(depth_means) != n:
            raise ValueError("depth means must align with boxes")
        out[AttributeId.DC] = np.zeros(n, dtype=bool)
    for t in range(n):
        lo, hi = window(t, n)
        win = boxes[lo : hi + 1]
        out[AttributeId.AC][t] = compute_ac(win)
        out[AttributeId.SC][t] = compute_sc(win)
        out[AttributeId.FM][t] = t > 0 and compute_fm(boxes[t - 1], boxes[t])
        if depth_means is not None:
            out[AttributeId.DC][t] = _ratio_exceeds(
                [m for m in depth_means[lo : hi + 1] if m is not None]
            )
    return out


def sequence_depth_means(sequence) -> list[float | None]:
    return [target_depth_mean(sequence.depth(t), g) for t, g in enumerate(sequence.groundtruth)]


def assemble_table(
    computed: Mapping[AttributeId, np.ndarray],
    manual: Mapping[AttributeId, np.ndarray],
    n_frames: int | None = None,
) -> AttributeTable:
    """Stack computed and manual rows; NaN is derived, never taken from the inputs.

    Missing manual rows are treated as all-false.
    """
    rows = {**{AttributeId(a): np.asarray(v, bool) for a, v in manual.items()}}
    for a, v in computed.items():
        a = AttributeId(a)
        if a is AttributeId.NaN:
            continue
        if a in MANUAL_ATTRIBUTES:
            raise ValueError(f"{a.name} is a manual attribute, not a computed one")
        rows[a] = np.asarray(v, bool)
    if AttributeId.NaN in rows:
        raise ValueError("NaN is derived from the other attributes and cannot be supplied")
    lengths = {len(v) for v in rows.values()}
    if n_frames is not None:
        lengths.add(n_frames)
    if len(lengths) != 1:
        raise ValueError(f"attribute rows have mismatched frame counts: {sorted(lengths)}")
    (n,) = lengths
    flags = np.zeros((len(AttributeId), n), dtype=bool)
    for a, v in rows.items():
        flags[int(a)] = v
    flags[int(AttributeId.NaN)] = ~flags[: int(AttributeId.NaN)].any(axis=0)
    provenance = {a: ("computed" if a in COMPUTED_ATTRIBUTES else "manual") for a in AttributeId}
    return AttributeTable(flags, provenance)


def annotate_sequence(sequence, manual: Mapping[AttributeId, np.ndarray] | None = None) -> AttributeTable:
    """Full attribute table for a loaded sequence."""
    computed = compute_sequence_attributes(sequence.groundtruth, sequence_depth_means(sequence))
    return assemble_table(computed, manual or {}, n_frames=sequence.frame_count)
