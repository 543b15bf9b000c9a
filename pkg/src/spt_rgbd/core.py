"""Shared domain types: boxes, per-frame ground truth, predictions, sequences, attributes."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: top-left corner plus extent, continuous pixel coordinates."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"box field {name} is not finite: {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extent must be positive, got w={self.w}, h={self.h}")

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "BoundingBox":
        return cls(x1, y1, x2 - x1, y2 - y1)

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    def translated(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x + dx, self.y + dy, self.w, self.h)

    def scaled(self, s: float) -> "BoundingBox":
        return BoundingBox(self.x * s, self.y * s, self.w * s, self.h * s)


class _Marker:
    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name

    def __reduce__(self):
        return self._name


ABSENT = _Marker("ABSENT")
"""Target not visible in the frame (full occlusion or out of frame)."""

UNANNOTATED = _Marker("UNANNOTATED")
"""Training-split frame beyond the annotated prefix; carries no ground truth at all."""

GroundTruthEntry = Union[BoundingBox, _Marker]


def is_present(entry: GroundTruthEntry) -> bool:
    return isinstance(entry, BoundingBox)


@dataclass(frozen=True)
class Prediction:
    box: BoundingBox
    confidence: float

    def __post_init__(self):
        if not math.isfinite(self.confidence):
            raise ValueError(f"confidence is not finite: {self.confidence!r}")


class AttributeId(enum.IntEnum):
    """The 15 per-frame attributes; the integer value is the row in an attribute table."""

    AC = 0  # aspect-ratio change
    BC = 1  # background clutter
    CM = 2  # camera motion
    DC = 3  # depth change
    DS = 4  # dark scene
    FM = 5  # fast motion
    FO = 6  # full occlusion
    ND = 7  # non-rigid deformation
    OP = 8  # out-of-plane rotation
    OF = 9  # out of frame
    PO = 10  # partial occlusion
    RT = 11  # reflective target
    SC = 12  # size change
    SO = 13  # similar objects
    NaN = 14  # unassigned


COMPUTED_ATTRIBUTES = (AttributeId.AC, AttributeId.DC, AttributeId.FM, AttributeId.SC, AttributeId.NaN)
MANUAL_ATTRIBUTES = tuple(a for a in AttributeId if a not in COMPUTED_ATTRIBUTES)


@dataclass
class AttributeTable:
    """Boolean 15 x N table of per-frame attributes.

    Rows follow ``AttributeId`` order. ``NaN`` is set on a frame exactly when no
    other attribute is.
    """

    flags: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        flags = np.asarray(self.flags)
        if flags.ndim != 2 or flags.shape[0] != len(AttributeId):
            raise ValueError(f"attribute table must be 15 x N, got shape {flags.shape}")
        if flags.dtype != bool:
            if not np.isin(flags, (0, 1)).all():
                raise ValueError("attribute table entries must be 0/1")
            flags = flags.astype(bool)
        self.flags = flags
        if not self.provenance:
            self.provenance = {
                a: ("computed" if a in COMPUTED_ATTRIBUTES else "manual") for a in AttributeId
            }
        bad = nan_exclusivity_violations(flags)
        if bad.size:
            raise ValueError(f"NaN exclusivity violated on frames {bad[:10].tolist()}")

    @property
    def frame_count(self) -> int:
        return self.flags.shape[1]

    def __getitem__(self, attr: AttributeId) -> np.ndarray:
        return self.flags[int(attr)]

    def frames_with(self, attr: AttributeId) -> np.ndarray:
        return np.flatnonzero(self.flags[int(attr)])


def nan_exclusivity_violations(flags: np.ndarray) -> np.ndarray:
    """Frame indices where the NaN row disagrees with 'no other attribute set'."""
    flags = np.asarray(flags, dtype=bool)
    others = np.delete(flags, int(AttributeId.NaN), axis=0).any(axis=0)
    return np.flatnonzero(flags[int(AttributeId.NaN)] == others)


FrameRef = Union[Path, np.ndarray]


@dataclass
class SequenceRecord:
    """One RGB-D sequence. Frame refs are file paths (loaded lazily) or in-memory arrays."""

    id: str
    rgb_refs: Sequence[FrameRef]
    depth_refs: Sequence[FrameRef]
    groundtruth: list
    attributes: AttributeTable | None = None
    loader: Callable[[FrameRef, str], np.ndarray] | None = None

    def __post_init__(self):
        n = len(self.rgb_refs)
        if len(self.depth_refs) != n:
            raise ValueError(f"{self.id}: {n} rgb frames but {len(self.depth_refs)} depth frames")
        if len(self.groundtruth) != n:
            raise ValueError(f"{self.id}: {n} frames but {len(self.groundtruth)} ground-truth entries")
        if self.attributes is not None and self.attributes.frame_count != n:
            raise ValueError(
                f"{self.id}: attribute table has {self.attributes.frame_count} columns, expected {n}"
            )

    @property
    def frame_count(self) -> int:
        return len(self.rgb_refs)

    def _load(self, ref: FrameRef, kind: str) -> np.ndarray:
        if isinstance(ref, np.ndarray):
            return ref
        if self.loader is None:
            raise RuntimeError(f"{self.id}: no loader for frame reference {ref}")
        return self.loader(ref, kind)

    def rgb(self, t: int) -> np.ndarray:
        """H x W x 3 uint8 frame."""
        return self._load(self.rgb_refs[t], "rgb")

    def depth(self, t: int) -> np.ndarray:
        """H x W uint16 depth in millimetres; 0 means no measurement."""
        return self._load(self.depth_refs[t], "depth")

    def annotated_prefix(self) -> int:
        """Number of leading frames that carry ground truth (present or absent)."""
        for i, g in enumerate(self.groundtruth):
            if g is UNANNOTATED:
                return i
        return self.frame_count


def box_area(b: BoundingBox) -> float:
    return b.w * b.h


def box_center(b: BoundingBox) -> tuple[float, float]:
    return (b.x + b.w / 2, b.y + b.h / 2)


def clip_to_frame(b: BoundingBox, frame_w: float, frame_h: float) -> BoundingBox | None:
    """Intersect ``b`` with the image rectangle; ``None`` when nothing with positive area remains."""
    if frame_w <= 0 or frame_h <= 0:
        raise ValueError("frame dimensions must be positive")
    x1 = min(max(b.x, 0.0), frame_w)
    y1 = min(max(b.y, 0.0), frame_h)
    x2 = min(max(b.x2, 0.0), frame_w)
    y2 = min(max(b.y2, 0.0), frame_h)
    if x2 - x1 <= 0 or y2 - y1 <= 0:
        return None
    if (x1, y1, x2, y2) == (b.x, b.y, b.x2, b.y2):
        return b
    return BoundingBox(x1, y1, x2 - x1, y2 - y1)
