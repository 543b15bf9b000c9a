"""RGB-D long-term tracking toolkit: SPT tracker, evaluation protocol, attributes, dataset I/O."""

from spt_rgbd.core import (
    ABSENT,
    UNANNOTATED,
    AttributeId,
    AttributeTable,
    BoundingBox,
    Prediction,
    SequenceRecord,
    box_area,
    box_center,
    clip_to_frame,
)

__all__ = [
    "ABSENT",
    "UNANNOTATED",
    "AttributeId",
    "AttributeTable",
    "BoundingBox",
    "Prediction",
    "SequenceRecord",
    "box_area",
    "box_center",
    "clip_to_frame",
]

__version__ = "0.1.0"
