"""Long-term tracking evaluation: confidence-thresholded precision, recall and F-score."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from spt_rgbd.core import (
    UNANNOTATED,
    AttributeId,
    AttributeTable,
    BoundingBox,
    GroundTruthEntry,
    Prediction,
    is_present,
)

# FO/OF frames carry no ground-truth box, so per-attribute overlap skips them.
OVERLAP_ATTRIBUTES = tuple(a for a in AttributeId if a not in (AttributeId.FO, AttributeId.OF))

AGGREGATION_MODES = ("sequence", "frame")


class EvaluationInputError(ValueError):
    pass


def iou(a: BoundingBox, b: BoundingBox) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # areas from corner differences, like the intersection, so iou(a, a) is exactly 1
    union = (a.x2 - a.x) * (a.y2 - a.y) + (b.x2 - b.x) * (b.y2 - b.y) - inter
    return min(1.0, inter / union)


def _check_aligned(preds: Sequence[Prediction], gts: Sequence[GroundTruthEntry]):
    if len(preds) != len(gts):
        raise EvaluationInputError(f"{len(preds)} predictions for {len(gts)} ground-truth frames")
    if any(g is UNANNOTATED for g in gts):
        raise EvaluationInputError("unannotated frames must be removed before evaluation")


def _overlaps(preds: Sequence[Prediction], gts: Sequence[GroundTruthEntry]) -> np.ndarray:
    """Overlap of every prediction with its ground truth; 0 on target-absent frames."""
    return np.array(
        [iou(p.box, g) if is_present(g) else 0.0 for p, g in zip(preds, gts)], dtype=float
    )


@dataclass
class _SequenceStats:
    confidences: np.ndarray
    overlaps: np.ndarray
    visible: np.ndarray

    @classmethod
    def build(cls, preds, gts) -> "_SequenceStats":
        _check_aligned(preds, gts)
        return cls(
            confidences=np.array([p.confidence for p in preds], dtype=float),
            overlaps=_overlaps(preds, gts),
            visible=np.array([is_present(g) for g in gts], dtype=bool),
        )

    def sums(self, tau: float) -> tuple[float, int, float, int]:
        """(retained overlap sum, N_p, recall overlap sum, N_g) at threshold ``tau``."""
        kept = self.confidences >= tau
        pr_sum = float(self.overlaps[kept].sum())
        re_sum = float(self.overlaps[kept & self.visible].sum())
        return pr_sum, int(kept.sum()), re_sum, int(self.visible.sum())


def _ratio(num: float, den: int) -> float:
    return num / den if den > 0 else 0.0


def precision(preds: Sequence[Prediction], gts: Sequence[GroundTruthEntry], tau: float) -> float:
    pr_sum, n_p, _, _ = _SequenceStats.build(preds, gts).sums(tau)
    return _ratio(pr_sum, n_p)


def recall(preds: Sequence[Prediction], gts: Sequence[GroundTruthEntry], tau: float) -> float:
    _, _, re_sum, n_g = _SequenceStats.build(preds, gts).sums(tau)
    return _ratio(re_sum, n_g)


def f_measure(pr: float, re: float) -> float:
    if pr + re == 0:
        return 0.0
    return 2 * pr * re / (pr + re)


@dataclass
class EvalResult:
    thresholds: list[float]
    pr_curve: list[float]
    re_curve: list[float]
    f_curve: list[float]
    best_f: float
    best_threshold: float
    mode: str = "sequence"
    extra: dict = field(default_factory=dict)

    @property
    def best_index(self) -> int:
        return self.thresholds.index(self.best_threshold)

    @property
    def best_pr(self) -> float:
        return self.pr_curve[self.best_index]

    @property
    def best_re(self) -> float:
        return self.re_curve[self.best_index]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "thresholds": self.thresholds,
            "pr_curve": self.pr_curve,
            "re_curve": self.re_curve,
            "f_curve": self.f_curve,
            "best_f": self.best_f,
            "best_threshold": self.best_threshold,
            "best_pr": self.best_pr,
            "best_re": self.best_re,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalResult":
        return cls(
            thresholds=list(d["thresholds"]),
            pr_curve=list(d["pr_curve"]),
            re_curve=list(d["re_curve"]),
            f_curve=list(d["f_curve"]),
            best_f=d["best_f"],
            best_threshold=d["best_threshold"],
            mode=d.get("mode", "sequence"),
        )


def threshold_grid(confidences: np.ndarray) -> list[float]:
    """Distinct confidences, ascending, preceded by a retain-all sentinel.

    Pr and Re are step functions of the threshold that only change at observed
    confidences, so the maximum over this grid is the maximum over all reals.
    """
    distinct = np.unique(confidences)
    sentinel = float(distinct[0]) - 1.0
    return [sentinel] + [float(c) for c in distinct]


def pr_re_at(stats: Sequence[_SequenceStats], tau: float, mode: str) -> tuple[float, float]:
    if mode == "sequence":
        prs, res = [], []
        for s in stats:
            pr_sum, n_p, re_sum, n_g = s.sums(tau)
            prs.append(_ratio(pr_sum, n_p))
            res.append(_ratio(re_sum, n_g))
        return float(np.mean(prs)), float(np.mean(res))
    if mode == "frame":
        tot = np.zeros(4)
        for s in stats:
            tot += s.sums(tau)
        return _ratio(tot[0], int(tot[1])), _ratio(tot[2], int(tot[3]))
    raise EvaluationInputError(f"unknown aggregation mode {mode!r}; expected one of {AGGREGATION_MODES}")


def sweep_thresholds(
    preds_per_sequence: Sequence[Sequence[Prediction]],
    gts_per_sequence: Sequence[Sequence[GroundTruthEntry]],
    aggregation_mode: str = "sequence",
) -> EvalResult:
    if aggregation_mode not in AGGREGATION_MODES:
        raise EvaluationInputError(f"unknown aggregation mode {aggregation_mode!r}")
    if len(preds_per_sequence) == 0:
        raise EvaluationInputError("no sequences to evaluate")
    if len(preds_per_sequence) != len(gts_per_sequence):
        raise EvaluationInputError("prediction and ground-truth sequence counts differ")
    stats = [_SequenceStats.build(p, g) for p, g in zip(preds_per_sequence, gts_per_sequence)]
    all_conf = np.concatenate([s.confidences for s in stats])
    if all_conf.size == 0:
        raise EvaluationInputError("no frames to evaluate")
    grid = threshold_grid(all_conf)

    prs, res, fs = [], [], []
    for tau in grid:
        pr, re = pr_re_at(stats, tau, aggregation_mode)
        prs.append(pr)
        res.append(re)
        fs.append(f_measure(pr, re))
    best = int(np.argmax(fs))
    return EvalResult(
        thresholds=grid,
        pr_curve=prs,
        re_curve=res,
        f_curve=fs,
        best_f=fs[best],
        best_threshold=grid[best],
        mode=aggregation_mode,
    )


def per_attribute_overlap(
    preds: Sequence[Prediction],
    gts: Sequence[GroundTruthEntry],
    attribute_table: AttributeTable | np.ndarray,
) -> dict[AttributeId, float]:
    """Mean overlap per attribute over frames with a visible target; no confidence filtering."""
    flags = attribute_table.flags if isinstance(attribute_table, AttributeTable) else np.asarray(attribute_table, bool)
    if len(preds) != len(gts) or flags.shape[1] != len(gts):
        raise EvaluationInputError("attribute table, predictions and ground truth must be frame-aligned")
    visible = np.array([is_present(g) for g in gts], dtype=bool)
    overlaps = np.array(
        [iou(p.box, g) if is_present(g) else math.nan for p, g in zip(preds, gts)], dtype=float
    )
    out = {}
    for attr in OVERLAP_ATTRIBUTES:
        sel = flags[int(attr)] & visible
        if sel.any():
            out[attr] = float(overlaps[sel].mean())
    return out
