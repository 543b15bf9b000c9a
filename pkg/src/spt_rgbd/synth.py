"""Deterministic synthetic RGB-D sequences with scripted events and exact ground truth."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import cv2
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from spt_rgbd import dataset_io
from spt_rgbd.attributes import FM_FRACTION, HALF_WINDOW, RATIO_THRESHOLD, assemble_table
from spt_rgbd.core import ABSENT, UNANNOTATED, AttributeId, BoundingBox, SequenceRecord


class SynthConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    name: str = "synth_000"
    seed: int = 0
    frame_size: tuple[int, int] = (160, 120)  # (width, height)
    n_frames: int = 60
    waypoints: list = field(default_factory=lambda: [(0, 80.0, 60.0)])  # (t, cx, cy)
    size_keys: list = field(default_factory=lambda: [(0, 24.0, 24.0)])  # (t, w, h)
    depth_keys: list = field(default_factory=lambda: [(0, 1500.0)])  # (t, mm), held piecewise constant
    interpolation: str = "linear"  # or "step"
    occlusion_intervals: list = field(default_factory=list)  # full occlusion, [start, end)
    out_of_frame_intervals: list = field(default_factory=list)
    partial_occlusion_intervals: list = field(default_factory=list)
    background_depth_mm: float = 4000.0
    depth_dropout: float = 0.02
    depth_jitter_mm: int = 4
    distractors: int = 0
    split: str = "test"
    annotated_prefix: int | None = None  # training split only

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        for k in ("waypoints", "size_keys", "depth_keys", "occlusion_intervals",
                  "out_of_frame_intervals", "partial_occlusion_intervals"):
            if k in d:
                d[k] = [tuple(v) for v in d[k]]
        if "frame_size" in d:
            d["frame_size"] = tuple(d["frame_size"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise SynthConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def validate(self):
        n = self.n_frames
        if n < 1:
            raise SynthConfigError("n_frames must be positive")
        if self.frame_size[0] < 16 or self.frame_size[1] < 16:
            raise SynthConfigError("frame_size too small")
        if self.interpolation not in ("linear", "step"):
            raise SynthConfigError(f"unknown interpolation {self.interpolation!r}")
        for name in ("occlusion_intervals", "out_of_frame_intervals", "partial_occlusion_intervals"):
            for a, b in getattr(self, name):
                if not 0 <= a < b <= n:
                    raise SynthConfigError(f"{name}: interval [{a}, {b}) outside [0, {n})")
        for name in ("waypoints", "size_keys", "depth_keys"):
            keys = getattr(self, name)
            if not keys:
                raise SynthConfigError(f"{name} must not be empty")
            ts = [k[0] for k in keys]
            if ts != sorted(ts) or len(set(ts)) != len(ts):
                raise SynthConfigError(f"{name}: key frames must be strictly increasing")
        if any(d <= 0 for _, d in self.depth_keys) or self.background_depth_mm <= 0:
            raise SynthConfigError("depths must be positive")
        if max(d for _, d in self.depth_keys) + self.depth_jitter_mm > 65535:
            raise SynthConfigError("depth exceeds 16-bit range")
        if self.split not in dataset_io.SPLITS:
            raise SynthConfigError(f"unknown split {self.split!r}")
        if self.annotated_prefix is not None and self.split != "train":
            raise SynthConfigError("annotated_prefix only applies to the training split")


@dataclass
class EventLog:
    visible: np.ndarray
    expected: dict  # AttributeId -> bool array, for AC/DC/FM/SC
    manual: dict  # AttributeId -> bool array, for FO/OF/PO/SO
    boxes: np.ndarray  # N x 4 scheduled boxes (x, y, w, h), also on hidden frames
    depth_mm: np.ndarray  # scheduled target depth per frame


def _interp(keys: Sequence[tuple], n: int, mode: str) -> np.ndarray:
    """Per-frame values from (t, v1, v2, ...) key frames; held constant outside the keys."""
    keys = np.asarray(keys, dtype=float)
    t = np.arange(n, dtype=float)
    cols = []
    for j in range(1, keys.shape[1]):
        if mode == "linear":
            cols.append(np.interp(t, keys[:, 0], keys[:, j]))
        else:
            idx = np.clip(np.searchsorted(keys[:, 0], t, side="right") - 1, 0, len(keys) - 1)
            cols.append(keys[idx, j])
    return np.stack(cols, axis=1)


def _mask(intervals, n: int) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    for a, b in intervals:
        m[int(a):int(b)] = True
    return m


def scheduled_boxes(cfg: SynthConfig) -> np.ndarray:
    """Integer-pixel boxes (x, y, w, h) for every frame, rounded from the schedules."""
    n = cfg.n_frames
    centers = _interp(cfg.waypoints, n, cfg.interpolation)
    sizes = np.maximum(np.rint(_interp(cfg.size_keys, n, cfg.interpolation)), 1.0)
    x = np.rint(centers[:, 0] - sizes[:, 0] / 2)
    y = np.rint(centers[:, 1] - sizes[:, 1] / 2)
    return np.stack([x, y, sizes[:, 0], sizes[:, 1]], axis=1)


def _window_ratio_flags(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """max/min over each clamped 21-frame window of valid entries, compared with the ratio threshold."""
    pad = np.full(HALF_WINDOW, np.nan)
    v = np.where(valid, values, np.nan)
    win = sliding_window_view(np.concatenate([pad, v, pad]), 2 * HALF_WINDOW + 1)
    count = np.sum(~np.isnan(win), axis=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        hi = np.nanmax(win, axis=1)
        lo = np.nanmin(win, axis=1)
    return (count >= 2) & (hi / lo > RATIO_THRESHOLD)


def expected_attributes(boxes: np.ndarray, visible: np.ndarray, depth_mm: np.ndarray) -> dict:
    w, h = boxes[:, 2], boxes[:, 3]
    cx, cy = boxes[:, 0] + w / 2, boxes[:, 1] + h / 2
    fm = np.zeros(len(boxes), dtype=bool)
    step = np.hypot(np.diff(cx), np.diff(cy))
    fm[1:] = visible[1:] & visible[:-1] & (step / np.sqrt(w[:-1] * h[:-1]) >= FM_FRACTION)
    return {
        AttributeId.AC: _window_ratio_flags(w / h, visible),
        AttributeId.SC: _window_ratio_flags(w * h, visible),
        AttributeId.DC: _window_ratio_flags(depth_mm, visible),
        AttributeId.FM: fm,
    }


def _background(rng: np.random.Generator, width: int, height: int) -> np.ndarray:
    coarse = rng.integers(40, 200, size=(height // 8 + 1, width // 8 + 1, 3)).astype(np.uint8)
    bg = cv2.resize(coarse, (width, height), interpolation=cv2.INTER_LINEAR)
    yy, xx = np.mgrid[0:height, 0:width]
    checker = (((yy // 12) + (xx // 12)) % 2 * 20).astype(np.int16)
    return np.clip(bg.astype(np.int16) - checker[..., None], 0, 255).astype(np.uint8)


def _target_texture(rng: np.random.Generator) -> np.ndarray:
    base = np.array(rng.integers(150, 256, size=3), dtype=np.int16)
    tex = np.empty((32, 32, 3), dtype=np.int16)
    yy, xx = np.mgrid[0:32, 0:32]
    stripes = ((xx + yy) // 4) % 2
    tex[:] = base
    tex[stripes == 1] = base[::-1] // 3
    tex[12:20, 12:20] = (255, 255, 255)
    return tex.astype(np.uint8)


def _paste(img: np.ndarray, tex: np.ndarray, box: np.ndarray):
    x, y, w, h = (int(v) for v in box)
    if w <= 0 or h <= 0:
        return
    H, W = img.shape[:2]
    patch = cv2.resize(tex, (w, h), interpolation=cv2.INTER_NEAREST)
    x0, y0, x1, y1 = max(x, 0), max(y, 0), min(x + w, W), min(y + h, H)
    if x1 <= x0 or y1 <= y0:
        return
    img[y0:y1, x0:x1] = patch[y0 - y : y1 - y, x0 - x : x1 - x]


def generate_sequence(cfg: SynthConfig) -> tuple[SequenceRecord, EventLog]:
    cfg.validate()
    n = cfg.n_frames
    width, height = cfg.frame_size
    rng = np.random.default_rng(cfg.seed)

    boxes = scheduled_boxes(cfg)
    depth_mm = np.rint(_interp(cfg.depth_keys, n, "step")[:, 0])
    fo = _mask(cfg.occlusion_intervals, n)
    of = _mask(cfg.out_of_frame_intervals, n)
    po = _mask(cfg.partial_occlusion_intervals, n)
    visible = ~(fo | of)

    x, y, w, h = boxes.T
    bad = visible & ((x < 0) | (y < 0) | (x + w > width) | (y + h > height) | (w < 2) | (h < 2))
    if bad.any():
        raise SynthConfigError(
            f"{cfg.name}: target box leaves the image on visible frames {np.flatnonzero(bad)[:10].tolist()}"
        )

    background = _background(rng, width, height)
    texture = _target_texture(rng)
    occluder = np.full((8, 8, 3), 90, dtype=np.uint8)
    w0, h0 = boxes[0, 2], boxes[0, 3]
    distractor_boxes = [
        np.array([rng.integers(0, max(1, width - w0)), rng.integers(0, max(1, height - h0)), w0, h0])
        for _ in range(cfg.distractors)
    ]

    rgb_frames, depth_frames, gt = [], [], []
    for t in range(n):
        img = background.copy()
        for db in distractor_boxes:
            _paste(img, texture, db)
        depth = np.full((height, width), cfg.background_depth_mm, dtype=np.float64)
        bx = boxes[t]
        if visible[t]:
            _paste(img, texture, bx)
            xi, yi, wi, hi = (int(v) for v in bx)
            depth[yi : yi + hi, xi : xi + wi] = depth_mm[t]
            if po[t]:
                _paste(img, occluder, np.array([xi, yi, max(1, wi // 2), hi]))
            gt.append(BoundingBox(*(float(v) for v in bx)))
        else:
            if fo[t]:
                _paste(img, occluder, bx)
            gt.append(ABSENT)
        if cfg.depth_jitter_mm:
            depth += rng.integers(-cfg.depth_jitter_mm, cfg.depth_jitter_mm + 1, size=depth.shape)
        if cfg.depth_dropout > 0:
            depth[rng.random(depth.shape) < cfg.depth_dropout] = 0
        rgb_frames.append(img)
        depth_frames.append(np.clip(depth, 0, 65535).astype(np.uint16))

    if cfg.split == "train" and cfg.annotated_prefix is not None:
        gt = gt[: cfg.annotated_prefix] + [UNANNOTATED] * (n - cfg.annotated_prefix)

    manual = {
        AttributeId.FO: fo,
        AttributeId.OF: of,
        AttributeId.PO: po & visible,
        AttributeId.SO: np.full(n, cfg.distractors > 0),
    }
    log = EventLog(
        visible=visible,
        expected=expected_attributes(boxes, visible, depth_mm),
        manual=manual,
        boxes=boxes,
        depth_mm=depth_mm,
    )
    attrs = assemble_table(log.expected, manual, n_frames=n) if cfg.split == "test" else None
    record = SequenceRecord(
        id=cfg.name, rgb_refs=rgb_frames, depth_refs=depth_frames, groundtruth=gt, attributes=attrs
    )
    return record, log


def write_synth_dataset(configs: Iterable[SynthConfig], root: str | Path) -> Path:
    root = Path(root)
    names: dict[str, list[str]] = {}
    for cfg in configs:
        record, _ = generate_sequence(cfg)
        dataset_io.write_sequence(
            root / cfg.split / cfg.name,
            record.rgb_refs,
            record.depth_refs,
            record.groundtruth,
            record.attributes,
        )
        names.setdefault(cfg.split, []).append(cfg.name)
    for split, ns in names.items():
        if len(set(ns)) != len(ns):
            raise SynthConfigError(f"duplicate sequence names in split {split}")
        dataset_io.write_list(root, split, ns)
    return root


def random_config(seed: int, name: str | None = None, n_frames: int = 80, split: str = "test") -> SynthConfig:
    """A varied but feasible config: motion, size/aspect/depth changes, occlusion and out-of-frame events."""
    rng = np.random.default_rng(seed)
    width, height = 160, 120
    n_keys = 4
    ts = np.linspace(0, n_frames - 1, n_keys).round().astype(int).tolist()
    sizes = []
    for _ in ts:
        s = float(rng.uniform(14, 30))
        aspect = float(rng.choice([1.0, 1.0, 0.55, 1.8]))
        sizes.append((s * np.sqrt(aspect), s / np.sqrt(aspect)))
    max_w = max(s[0] for s in sizes)
    max_h = max(s[1] for s in sizes)
    waypoints = []
    for i, t in enumerate(ts):
        cx = float(rng.uniform(max_w / 2 + 2, width - max_w / 2 - 2))
        cy = float(rng.uniform(max_h / 2 + 2, height - max_h / 2 - 2))
        waypoints.append((t, cx, cy))
    depth_keys = [(t, float(rng.choice([900.0, 1200.0, 2000.0, 2600.0]))) for t in ts]
    occl, oof, part = [], [], []
    lo, hi = max(1, n_frames // 8), max(2, n_frames - n_frames // 4)

    def start(length: int) -> int:
        return int(rng.integers(lo, max(lo + 1, min(hi, n_frames - length))))

    if n_frames >= 20 and rng.random() < 0.7:
        length = int(rng.integers(3, 8))
        a = start(length)
        occl.append((a, a + length))
    if n_frames >= 20 and rng.random() < 0.5:
        length = int(rng.integers(2, 6))
        a = start(length)
        if not any(s <= a + length and a <= e for s, e in occl):
            oof.append((a, a + length))
    if n_frames >= 10 and rng.random() < 0.5:
        length = min(8, n_frames - 1)
        a = int(rng.integers(0, n_frames - length))
        part.append((a, a + length))
    return SynthConfig(
        name=name or f"synth_{seed:03d}",
        seed=seed,
        frame_size=(width, height),
        n_frames=n_frames,
        waypoints=waypoints,
        size_keys=[(t, w, h) for t, (w, h) in zip(ts, sizes)],
        depth_keys=depth_keys,
        occlusion_intervals=occl,
        out_of_frame_intervals=oof,
        partial_occlusion_intervals=part,
        interpolation="step" if rng.random() < 0.3 else "linear",
        distractors=int(rng.integers(0, 3)),
        split=split,
    )


def load_config_file(path: str | Path) -> list[SynthConfig]:
    """JSON: ``{"sequences": [cfg, ...]}`` and/or ``{"random": {"count": n, "seed": s, "n_frames": k}}``."""
    conf = json.loads(Path(path).read_text())
    configs = [SynthConfig.from_dict(d) for d in conf.get("sequences", [])]
    rnd = conf.get("random")
    if rnd:
        base = int(rnd.get("seed", 0))
        for i in range(int(rnd.get("count", 1))):
            configs.append(
                random_config(base + i, n_frames=int(rnd.get("n_frames", 80)), split=rnd.get("split", "test"))
            )
    if not configs:
        raise SynthConfigError(f"{path}: no sequences configured")
    return configs
