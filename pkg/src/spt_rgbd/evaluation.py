"""Batch evaluation of result directories against a dataset, and report tables."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from spt_rgbd import dataset_io
from spt_rgbd.core import UNANNOTATED, is_present
from spt_rgbd.metrics import (
    OVERLAP_ATTRIBUTES,
    EvalResult,
    f_measure,
    per_attribute_overlap,
    sweep_thresholds,
)


class EvaluationError(RuntimeError):
    pass


@dataclass
class ReportBundle:
    dataset: str
    split: str
    mode: str
    results: dict[str, EvalResult] = field(default_factory=dict)
    attributes: dict[str, dict[str, float]] = field(default_factory=dict)
    attribute_frames: dict[str, int] = field(default_factory=dict)
    sequences: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "split": self.split,
            "mode": self.mode,
            "sequences": self.sequences,
            "results": {k: v.to_dict() for k, v in self.results.items()},
            "attributes": self.attributes,
            "attribute_frames": self.attribute_frames,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReportBundle":
        return cls(
            dataset=d["dataset"],
            split=d["split"],
            mode=d["mode"],
            results={k: EvalResult.from_dict(v) for k, v in d["results"].items()},
            attributes=d.get("attributes", {}),
            attribute_frames=d.get("attribute_frames", {}),
            sequences=d.get("sequences", []),
        )

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "ReportBundle":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def rows(self) -> list[dict]:
        """One row per tracker; F is recomputed from the reported Pr/Re so the row is self-consistent."""
        out = []
        for name, r in sorted(self.results.items()):
            out.append({
                "tracker": name,
                "pr": r.best_pr,
                "re": r.best_re,
                "f": f_measure(r.best_pr, r.best_re),
                "threshold": r.best_threshold,
            })
        return out


def tracker_dirs(results_root: Path) -> dict[str, Path]:
    """``<results>/<tracker>/<seq>.txt``; a directory holding .txt files directly is one tracker."""
    results_root = Path(results_root)
    if not results_root.is_dir():
        raise EvaluationError(f"{results_root}: results directory does not exist")
    if any(results_root.glob("*.txt")):
        return {results_root.name: results_root}
    dirs = {p.name: p for p in sorted(results_root.iterdir()) if p.is_dir()}
    if not dirs:
        raise EvaluationError(f"{results_root}: no tracker result directories")
    return dirs


def _load_annotations(dataset_root: Path, split: str):
    names = sorted(dataset_io.sequence_names(dataset_root, split))
    seqs = {}
    for n in names:
        seq_dir = Path(dataset_root) / split / n
        gt = dataset_io.read_groundtruth(seq_dir / dataset_io.GROUNDTRUTH_FILE)
        attrs = None
        if (seq_dir / dataset_io.ATTRIBUTES_FILE).is_file():
            attrs = dataset_io.read_attribute_table(seq_dir / dataset_io.ATTRIBUTES_FILE)
        seqs[n] = (gt, attrs)
    return seqs


def evaluate_results(
    predictions: dict[str, list],
    annotations: dict[str, tuple],
    mode: str = "sequence",
) -> tuple[EvalResult, dict[str, float], dict[str, int]]:
    """Evaluate one tracker: ``predictions`` and ``annotations`` keyed by sequence name."""
    preds_all, gts_all = [], []
    pooled_p, pooled_g, pooled_flags = [], [], []
    for name in sorted(annotations):
        gt, attrs = annotations[name]
        preds = predictions[name]
        if len(preds) != len(gt):
            raise EvaluationError(f"{name}: {len(preds)} predictions for {len(gt)} ground-truth frames")
        keep = [i for i, g in enumerate(gt) if g is not UNANNOTATED]
        p = [preds[i] for i in keep]
        g = [gt[i] for i in keep]
        preds_all.append(p)
        gts_all.append(g)
        if attrs is not None:
            pooled_p += p
            pooled_g += g
            pooled_flags.append(attrs.flags[:, keep])
    result = sweep_thresholds(preds_all, gts_all, mode)
    overlaps, frames = {}, {}
    if pooled_flags:
        flags = np.concatenate(pooled_flags, axis=1)
        overlaps = {a.name: v for a, v in per_attribute_overlap(pooled_p, pooled_g, flags).items()}
        visible = np.array([is_present(g) for g in pooled_g])
        frames = {a.name: int((flags[int(a)] & visible).sum()) for a in OVERLAP_ATTRIBUTES}
    return result, overlaps, frames


def evaluate_dataset(results_root, dataset_root, mode: str = "sequence", split: str = "test") -> ReportBundle:
    dataset_root = Path(dataset_root)
    annotations = _load_annotations(dataset_root, split)
    bundle = ReportBundle(dataset=dataset_root.name, split=split, mode=mode, sequences=sorted(annotations))
    for tracker, tdir in tracker_dirs(Path(results_root)).items():
        predictions = {}
        for name in annotations:
            path = tdir / f"{name}.txt"
            if not path.is_file():
                raise EvaluationError(f"{tracker}: missing result file for sequence {name} ({path})")
            predictions[name] = dataset_io.read_results(path)
        result, overlaps, frames = evaluate_results(predictions, annotations, mode)
        bundle.results[tracker] = result
        if overlaps:
            bundle.attributes[tracker] = overlaps
            bundle.attribute_frames = frames
    return bundle


# -- report files ---------------------------------------------------------------------------


def format_table(bundle: ReportBundle) -> str:
    lines = [f"{'tracker':<16} {'Pr':>6} {'Re':>6} {'F':>6} {'tau':>8}"]
    for r in bundle.rows():
        lines.append(f"{r['tracker']:<16} {r['pr']:6.3f} {r['re']:6.3f} {r['f']:6.3f} {r['threshold']:8.4f}")
    return "\n".join(lines)


def write_report(bundle: ReportBundle, out_dir: str | Path) -> list[Path]:
    """Summary table, per-tracker Pr/Re/F curves and attribute plot data as tab-separated text."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    summary = out / "summary.tsv"
    with open(summary, "w", newline="") as f:
        w = csv.writer(f, delimiter="\t", lineterminator="\n")
        w.writerow(["tracker", "precision", "recall", "f_score", "threshold", "mode"])
        for r in bundle.rows():
            w.writerow([r["tracker"], f"{r['pr']:.6f}", f"{r['re']:.6f}", f"{r['f']:.6f}",
                        repr(r["threshold"]), bundle.mode])
    written.append(summary)

    for name, res in sorted(bundle.results.items()):
        path = out / f"curve_{name}.tsv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f, delimiter="\t", lineterminator="\n")
            w.writerow(["threshold", "precision", "recall", "f_score"])
            for row in zip(res.thresholds, res.pr_curve, res.re_curve, res.f_curve):
                w.writerow([repr(v) for v in row])
        written.append(path)

    if bundle.attributes:
        trackers = sorted(bundle.attributes)
        path = out / "attributes.tsv"
        with open(path, "w", newline="") as f:
            w = csv.writer(f, delimiter="\t", lineterminator="\n")
            w.writerow(["attribute", "frames", *trackers])
            for a in OVERLAP_ATTRIBUTES:
                vals = [bundle.attributes[t].get(a.name) for t in trackers]
                if all(v is None for v in vals):
                    continue
                w.writerow([a.name, bundle.attribute_frames.get(a.name, 0),
                            *("" if v is None else f"{v:.6f}" for v in vals)])
        written.append(path)
    return written

