"""Online tracking: square crops, the SPT tracker loop, reference trackers, whole-sequence runs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import cv2
import numpy as np
import torch

from spt_rgbd.core import BoundingBox, Prediction, SequenceRecord, box_center, clip_to_frame, is_present
from spt_rgbd.network.head import soft_argmax

TEMPLATE_FACTOR = 2.0
SEARCH_FACTOR = 5.0


class TrackerError(RuntimeError):
    pass


@dataclass(frozen=True)
class CropTransform:
    """Maps between image pixels and a square crop resampled to ``out_size`` pixels.

    Continuous coordinates throughout: crop point ``u`` corresponds to image point
    ``x0 + u * scale``.
    """

    x0: float
    y0: float
    side: float
    out_size: int

    @property
    def scale(self) -> float:
        return self.side / self.out_size

    def to_image(self, u: float, v: float) -> tuple[float, float]:
        return self.x0 + u * self.scale, self.y0 + v * self.scale

    def to_crop(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.x0) / self.scale, (y - self.y0) / self.scale

    def unit_to_image(self, nx: float, ny: float) -> tuple[float, float]:
        return self.x0 + nx * self.side, self.y0 + ny * self.side

    def image_to_unit(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.x0) / self.side, (y - self.y0) / self.side

    def image_box_to_unit(self, b: BoundingBox) -> tuple[float, float, float, float]:
        nx, ny = self.image_to_unit(b.x, b.y)
        return nx, ny, b.w / self.side, b.h / self.side


def crop_side(box: BoundingBox, factor: float) -> float:
    return factor * math.sqrt(box.w * box.h)


def crop_square(image: np.ndarray, center: tuple[float, float], side: float, out_size: int):
    """Resample a square of ``side`` pixels centred on ``center``; outside pixels replicate the border."""
    if side <= 0:
        raise TrackerError(f"crop side must be positive, got {side}")
    t = CropTransform(center[0] - side / 2, center[1] - side / 2, side, out_size)
    k = t.scale
    # dst pixel (u, v) samples src at x0 + (u + 0.5) * k - 0.5 (pixel-centre convention)
    m = np.array([[k, 0.0, t.x0 + 0.5 * k - 0.5], [0.0, k, t.y0 + 0.5 * k - 0.5]])
    src = image.astype(np.float32) if image.dtype != np.float32 else image
    crop = cv2.warpAffine(
        src, m, (out_size, out_size), flags=cv2.INTER_LINEAR | cv2.WARP_INVERSE_MAP,
        borderMode=cv2.BORDER_REPLICATE,
    )
    return crop, t


def to_tensors(rgb_crop: np.ndarray, depth_crop: np.ndarray, dtype=torch.float32):
    rgb = torch.from_numpy(np.ascontiguousarray(rgb_crop.transpose(2, 0, 1))).to(dtype)[None]
    depth = torch.from_numpy(np.ascontiguousarray(depth_crop)).to(dtype)[None, None]
    return rgb, depth


def grid_to_image(corners: np.ndarray, grid: int, t: CropTransform) -> np.ndarray:
    """(x_tl, y_tl, x_br, y_br) grid indices -> image pixels; index i is the centre of cell i."""
    unit = (np.asarray(corners, dtype=float) + 0.5) / grid
    x1, y1 = t.unit_to_image(unit[0], unit[1])
    x2, y2 = t.unit_to_image(unit[2], unit[3])
    return np.array([x1, y1, x2, y2])


def image_to_grid(points: np.ndarray, grid: int, t: CropTransform) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    nx1, ny1 = t.image_to_unit(pts[0], pts[1])
    nx2, ny2 = t.image_to_unit(pts[2], pts[3])
    return np.array([nx1, ny1, nx2, ny2]) * grid - 0.5


def heatmap_confidence(p_tl: torch.Tensor, p_br: torch.Tensor) -> float:
    """Geometric mean of the two corner-map peaks (first batch element)."""
    return math.sqrt(float(p_tl[0].max()) * float(p_br[0].max()))


@dataclass
class TrackerState:
    template_feats: tuple
    prev_box: BoundingBox
    frame_size: tuple[int, int]  # (width, height)
    model: object
    search_factor: float = SEARCH_FACTOR
    dtype: torch.dtype = torch.float32
    last_heatmaps: tuple | None = field(default=None, repr=False)


def _model_geometry(model) -> tuple[int, int, int]:
    cfg = model.cfg
    return cfg.template_size, cfg.search_size, cfg.search_grid


def init_tracker(
    rgb: np.ndarray,
    depth: np.ndarray,
    box: BoundingBox,
    model,
    template_factor: float = TEMPLATE_FACTOR,
    search_factor: float = SEARCH_FACTOR,
    dtype: torch.dtype = torch.float32,
) -> TrackerState:
    height, width = rgb.shape[:2]
    clipped = clip_to_frame(box, width, height)
    if clipped is None:
        raise TrackerError(f"initial box {box} lies outside the {width}x{height} frame")
    template_size, _, _ = _model_geometry(model)
    side = crop_side(clipped, template_factor)
    center = box_center(clipped)
    rgb_crop, _ = crop_square(rgb, center, side, template_size)
    depth_crop, _ = crop_square(depth, center, side, template_size)
    t_rgb, t_depth = to_tensors(rgb_crop, depth_crop, dtype)
    with torch.no_grad():
        feats = model.template_features(t_rgb, t_depth)
    return TrackerState(feats, clipped, (width, height), model, search_factor, dtype)


def track_frame(state: TrackerState, rgb: np.ndarray, depth: np.ndarray) -> tuple[Prediction, TrackerState]:
    model = state.model
    _, search_size, grid = _model_geometry(model)
    prev = state.prev_box
    side = crop_side(prev, state.search_factor)
    rgb_crop, t = crop_square(rgb, box_center(prev), side, search_size)
    depth_crop, _ = crop_square(depth, box_center(prev), side, search_size)
    s_rgb, s_depth = to_tensors(rgb_crop, depth_crop, state.dtype)
    with torch.no_grad():
        out = model.search_heatmaps(state.template_feats, s_rgb, s_depth)
    p_tl, p_br = out["p_tl"], out["p_br"]
    x1, y1 = soft_argmax(p_tl)
    x2, y2 = soft_argmax(p_br)
    corners = np.array([float(x1[0]), float(y1[0]), float(x2[0]), float(y2[0])])
    ix1, iy1, ix2, iy2 = grid_to_image(corners, grid, t)
    confidence = heatmap_confidence(p_tl, p_br)

    width, height = state.frame_size
    box = None
    if ix2 > ix1 and iy2 > iy1:
        box = clip_to_frame(BoundingBox.from_corners(ix1, iy1, ix2, iy2), width, height)
    if box is None:
        box, confidence = prev, 0.0
    state.prev_box = box
    state.last_heatmaps = (p_tl, p_br)
    return Prediction(box, confidence), state


# -- whole sequences --------------------------------------------------------------------------


class Tracker(Protocol):
    name: str

    def initialize(self, sequence: SequenceRecord, box: BoundingBox) -> None: ...

    def track(self, sequence: SequenceRecord, t: int) -> Prediction: ...


class SPTTracker:
    def __init__(self, model, name: str = "SPT", template_factor: float = TEMPLATE_FACTOR,
                 search_factor: float = SEARCH_FACTOR):
        self.model = model
        self.name = name
        self.template_factor = template_factor
        self.search_factor = search_factor
        self.dtype = next(model.parameters()).dtype if hasattr(model, "parameters") else torch.float32
        self.state: TrackerState | None = None

    def initialize(self, sequence: SequenceRecord, box: BoundingBox):
        if hasattr(self.model, "eval"):
            self.model.eval()
        self.state = init_tracker(sequence.rgb(0), sequence.depth(0), box, self.model,
                                  self.template_factor, self.search_factor, self.dtype)

    def track(self, sequence: SequenceRecord, t: int) -> Prediction:
        pred, self.state = track_frame(self.state, sequence.rgb(t), sequence.depth(t))
        return pred


class OracleTracker:
    """Echoes ground truth: confidence 1 when visible, 0 (with the last visible box) when absent."""

    name = "oracle"

    def initialize(self, sequence: SequenceRecord, box: BoundingBox):
        self.last = box

    def track(self, sequence: SequenceRecord, t: int) -> Prediction:
        g = sequence.groundtruth[t]
        if is_present(g):
            self.last = g
            return Prediction(g, 1.0)
        return Prediction(self.last, 0.0)


class StaticTracker:
    """Repeats the initial box with a fixed confidence; a lower-bound baseline."""

    def __init__(self, confidence: float = 0.0, name: str = "static"):
        self.confidence = confidence
        self.name = name

    def initialize(self, sequence: SequenceRecord, box: BoundingBox):
        self.box = box

    def track(self, sequence: SequenceRecord, t: int) -> Prediction:
        return Prediction(self.box, self.confidence)


def make_tracker(source) -> Tracker:
    """``"oracle"``, ``"static"``, a checkpoint path, an SPT model, or a ready tracker object."""
    if hasattr(source, "initialize") and hasattr(source, "track"):
        return source
    if isinstance(source, str) and source == "oracle":
        return OracleTracker()
    if isinstance(source, str) and source == "static":
        return StaticTracker()
    if hasattr(source, "search_heatmaps"):
        return SPTTracker(source)
    from spt_rgbd.network.checkpoint import load_checkpoint

    return SPTTracker(load_checkpoint(source))


def run_sequence(tracker_spec, sequence: SequenceRecord) -> list[Prediction]:
    """Initialise on frame 0's ground truth and track every later frame; one prediction per frame."""
    first = sequence.groundtruth[0]
    if not is_present(first):
        raise TrackerError(f"{sequence.id}: target absent in the first frame, cannot initialise")
    tracker = make_tracker(tracker_spec)
    tracker.initialize(sequence, first)
    preds = [Prediction(first, 1.0)]
    for t in range(1, sequence.frame_count):
        preds.append(tracker.track(sequence, t))
    return preds
