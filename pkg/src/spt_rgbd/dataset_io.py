"""RGBD1K-style on-disk layout: reading/writing sequences, ground truth, attributes, results.

Layout::

    <root>/<split>/list.txt                 sequence names, one per line
    <root>/<split>/<seq>/rgb/00000001.jpg   8-bit 3-channel colour frames
    <root>/<split>/<seq>/depth/00000001.png 16-bit depth in millimetres, 0 = missing
    <root>/<split>/<seq>/groundtruth.txt    "x,y,w,h" per frame
    <root>/<split>/<seq>/attributes.csv     optional, 15 rows "NAME,0,1,..."

Ground truth lines: ``nan,nan,nan,nan`` marks an absent target, a blank line an
unannotated frame (training split only).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from PIL import Image

from spt_rgbd.core import (
    ABSENT,
    UNANNOTATED,
    AttributeId,
    AttributeTable,
    BoundingBox,
    Prediction,
    SequenceRecord,
    is_present,
    nan_exclusivity_violations,
)

SPLITS = ("train", "test")
GROUNDTRUTH_FILE = "groundtruth.txt"
ATTRIBUTES_FILE = "attributes.csv"
LIST_FILE = "list.txt"
FRAME_DIGITS = 8
_FRAME_RE = re.compile(r"^(\d+)\.(jpg|png)$")


class DatasetError(Exception):
    """Malformed or inconsistent dataset content; message names the file (and line)."""


def frame_name(index: int, ext: str) -> str:
    return f"{index + 1:0{FRAME_DIGITS}d}.{ext}"


def load_frame(path: Path, kind: str) -> np.ndarray:
    with Image.open(path) as im:
        if kind == "rgb":
            return np.asarray(im.convert("RGB"))
        arr = np.asarray(im)
    if arr.dtype != np.uint16:
        arr = arr.astype(np.uint16)
    return arr


def save_rgb(path: Path, rgb: np.ndarray, quality: int = 95):
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(path, quality=quality)


def save_depth(path: Path, depth: np.ndarray):
    Image.fromarray(np.asarray(depth, dtype=np.uint16)).save(path)


def png_bit_depth(path: Path) -> int:
    """Bit depth straight from the PNG IHDR chunk."""
    with open(path, "rb") as f:
        head = f.read(26)
    if len(head) < 26 or head[:8] != b"\x89PNG\r\n\x1a\n" or head[12:16] != b"IHDR":
        raise DatasetError(f"{path}: not a PNG file")
    return head[24]


def _list_frames(directory: Path, ext: str) -> list[Path]:
    if not directory.is_dir():
        raise DatasetError(f"{directory}: missing frame directory")
    frames = []
    for p in sorted(directory.iterdir()):
        m = _FRAME_RE.match(p.name)
        if m is None or m.group(2) != ext:
            continue
        frames.append((int(m.group(1)), p))
    numbers = [n for n, _ in frames]
    if any(b <= a for a, b in zip(numbers, numbers[1:])):
        raise DatasetError(f"{directory}: frame numbers are not strictly increasing")
    widths = {len(p.stem) for _, p in frames}
    if len(widths) > 1:
        raise DatasetError(f"{directory}: frame names are not uniformly zero-padded")
    return [p for _, p in frames]


# -- ground truth ---------------------------------------------------------------------------


def parse_groundtruth_line(line: str, where: str = "") -> object:
    s = line.strip()
    if s == "":
        return UNANNOTATED
    parts = [p.strip() for p in re.split(r"[,\t]", s)]
    if len(parts) != 4:
        raise DatasetError(f"{where}: expected 4 comma-separated values, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError as e:
        raise DatasetError(f"{where}: {e}") from None
    nans = [math.isnan(v) for v in vals]
    if all(nans):
        return ABSENT
    if any(nans) or not all(math.isfinite(v) for v in vals):
        raise DatasetError(f"{where}: partially missing or infinite box {s!r}")
    try:
        return BoundingBox(*vals)
    except ValueError as e:
        raise DatasetError(f"{where}: {e}") from None


def format_groundtruth_entry(entry) -> str:
    if entry is UNANNOTATED:
        return ""
    if entry is ABSENT:
        return "nan,nan,nan,nan"
    return ",".join(repr(float(v)) for v in entry.as_tuple())


def read_groundtruth(path: Path) -> list:
    if not path.is_file():
        raise DatasetError(f"{path}: missing ground-truth file")
    lines = path.read_text().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [parse_groundtruth_line(line, f"{path}:{i + 1}") for i, line in enumerate(lines)]


def write_groundtruth(path: Path, entries: Sequence):
    path.write_text("".join(format_groundtruth_entry(e) + "\n" for e in entries))


# -- attribute tables -----------------------------------------------------------------------


def write_attribute_table(path: Path, table: AttributeTable):
    with open(path, "w") as f:
        for a in AttributeId:
            f.write(a.name + "," + ",".join("1" if v else "0" for v in table[a]) + "\n")


def read_attribute_table(path: Path, n_frames: int | None = None) -> AttributeTable:
    rows: dict[AttributeId, np.ndarray] = {}
    for i, line in enumerate(Path(path).read_text().splitlines()):
        if not line.strip():
            continue
        name, *vals = line.strip().split(",")
        try:
            attr = AttributeId[name]
        except KeyError:
            raise DatasetError(f"{path}:{i + 1}: unknown attribute {name!r}") from None
        if attr in rows:
            raise DatasetError(f"{path}:{i + 1}: duplicate attribute row {name}")
        if any(v not in ("0", "1") for v in vals):
            raise DatasetError(f"{path}:{i + 1}: attribute values must be 0 or 1")
        rows[attr] = np.array([v == "1" for v in vals], dtype=bool)
    missing = [a.name for a in AttributeId if a not in rows]
    if missing:
        raise DatasetError(f"{path}: missing attribute rows {missing}")
    lengths = {len(v) for v in rows.values()}
    if len(lengths) != 1:
        raise DatasetError(f"{path}: attribute rows have different lengths {sorted(lengths)}")
    if n_frames is not None and lengths != {n_frames}:
        raise DatasetError(f"{path}: attribute table has {lengths.pop()} columns, expected {n_frames}")
    flags = np.stack([rows[a] for a in AttributeId])
    bad = nan_exclusivity_violations(flags)
    if bad.size:
        raise DatasetError(f"{path}: NaN exclusivity violated on frames {bad[:10].tolist()}")
    return AttributeTable(flags)


# -- sequences ------------------------------------------------------------------------------


def _infer_split(path: Path) -> str | None:
    return path.parent.name if path.parent.name in SPLITS else None


def load_sequence(path: str | Path, split: str | None = None) -> SequenceRecord:
    """Load a sequence directory; frames stay on disk until requested."""
    path = Path(path)
    if not path.is_dir():
        raise DatasetError(f"{path}: sequence directory does not exist")
    split = split or _infer_split(path) or "test"
    rgb = _list_frames(path / "rgb", "jpg")
    depth = _list_frames(path / "depth", "png")
    if len(rgb) != len(depth):
        raise DatasetError(f"{path}: rgb has {len(rgb)} frames but depth has {len(depth)}")
    n = len(rgb)
    gt = read_groundtruth(path / GROUNDTRUTH_FILE)
    if len(gt) > n:
        raise DatasetError(f"{path / GROUNDTRUTH_FILE}: {len(gt)} entries for {n} frames")
    if split == "train":
        prefix = next((i for i, g in enumerate(gt) if g is UNANNOTATED), len(gt))
        if any(g is not UNANNOTATED for g in gt[prefix:]):
            raise DatasetError(
                f"{path / GROUNDTRUTH_FILE}:{prefix + 1}: annotated entry after the unannotated tail began"
            )
        gt = gt + [UNANNOTATED] * (n - len(gt))
    else:
        if len(gt) != n:
            raise DatasetError(f"{path / GROUNDTRUTH_FILE}: {len(gt)} entries for {n} frames")
        for i, g in enumerate(gt):
            if g is UNANNOTATED:
                raise DatasetError(f"{path / GROUNDTRUTH_FILE}:{i + 1}: blank line in a test sequence")
    attrs = None
    if (path / ATTRIBUTES_FILE).is_file():
        attrs = read_attribute_table(path / ATTRIBUTES_FILE, n_frames=n)
    return SequenceRecord(
        id=path.name, rgb_refs=rgb, depth_refs=depth, groundtruth=gt, attributes=attrs, loader=load_frame
    )


def write_sequence(
    path: Path,
    rgb_frames: Iterable[np.ndarray],
    depth_frames: Iterable[np.ndarray],
    groundtruth: Sequence,
    attributes: AttributeTable | None = None,
):
    (path / "rgb").mkdir(parents=True, exist_ok=True)
    (path / "depth").mkdir(parents=True, exist_ok=True)
    for i, (rgb, depth) in enumerate(zip(rgb_frames, depth_frames)):
        save_rgb(path / "rgb" / frame_name(i, "jpg"), rgb)
        save_depth(path / "depth" / frame_name(i, "png"), depth)
    gt = list(groundtruth)
    while gt and gt[-1] is UNANNOTATED:
        gt.pop()
    write_groundtruth(path / GROUNDTRUTH_FILE, gt)
    if attributes is not None:
        write_attribute_table(path / ATTRIBUTES_FILE, attributes)


def sequence_names(root: str | Path, split: str = "test") -> list[str]:
    split_dir = Path(root) / split
    lst = split_dir / LIST_FILE
    if lst.is_file():
        return [s.strip() for s in lst.read_text().splitlines() if s.strip()]
    if not split_dir.is_dir():
        raise DatasetError(f"{split_dir}: split directory does not exist")
    return sorted(p.name for p in split_dir.iterdir() if p.is_dir())


def load_dataset(root: str | Path, split: str = "test") -> list[SequenceRecord]:
    return [load_sequence(Path(root) / split / name, split) for name in sequence_names(root, split)]


# -- tracker results ------------------------------------------------------------------------


def format_prediction(p: Prediction) -> str:
    # repr() is the shortest string that round-trips the double and ignores locale
    return ",".join(repr(float(v)) for v in (*p.box.as_tuple(), p.confidence))


def write_results(path: str | Path, predictions: Sequence[Prediction]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(format_prediction(p) + "\n" for p in predictions))


def parse_prediction_line(line: str, where: str = "") -> Prediction:
    parts = line.strip().split(",")
    if len(parts) != 5:
        raise DatasetError(f"{where}: expected 5 fields x,y,w,h,confidence, got {len(parts)}")
    try:
        x, y, w, h, c = (float(p) for p in parts)
        return Prediction(BoundingBox(x, y, w, h), c)
    except ValueError as e:
        raise DatasetError(f"{where}: {e}") from None


def read_results(path: str | Path) -> list[Prediction]:
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: missing result file")
    lines = path.read_text().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [parse_prediction_line(line, f"{path}:{i + 1}") for i, line in enumerate(lines)]


# -- validation -----------------------------------------------------------------------------


@dataclass
class CheckResult:
    sequence: str
    check: str
    passed: bool
    detail: str = ""


@dataclass
class ValidationReport:
    entries: list[CheckResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list[CheckResult]:
        return [e for e in self.entries if not e.passed]

    def add(self, sequence: str, check: str, passed: bool, detail: str = ""):
        self.entries.append(CheckResult(sequence, check, bool(passed), detail))

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "entries": [e.__dict__ for e in self.entries],
        }


def _validate_sequence(path: Path, split: str, report: ValidationReport, sample_all: bool):
    name = f"{split}/{path.name}"
    try:
        rgb = _list_frames(path / "rgb", "jpg")
        depth = _list_frames(path / "depth", "png")
    except DatasetError as e:
        report.add(name, "frame files", False, str(e))
        return
    report.add(name, "frame-count alignment", len(rgb) == len(depth) and len(rgb) > 0,
               f"rgb={len(rgb)} depth={len(depth)}")
    probe = range(len(depth)) if sample_all else sorted({0, len(depth) // 2, len(depth) - 1} - {-1})
    bad_depth = [depth[i].name for i in probe if png_bit_depth(depth[i]) != 16]
    report.add(name, "depth bit-depth", not bad_depth, f"non-16-bit: {bad_depth[:5]}" if bad_depth else "16")
    bad_rgb = []
    size = None
    for i in (range(len(rgb)) if sample_all else sorted({0, len(rgb) // 2, len(rgb) - 1} - {-1})):
        with Image.open(rgb[i]) as im:
            if im.mode != "RGB" or len(im.getbands()) != 3:
                bad_rgb.append(rgb[i].name)
            size = im.size
    report.add(name, "rgb channel count", not bad_rgb, f"non-RGB: {bad_rgb[:5]}" if bad_rgb else "3")
    try:
        gt = read_groundtruth(path / GROUNDTRUTH_FILE)
    except DatasetError as e:
        report.add(name, "ground truth", False, str(e))
        return
    expected = len(rgb)
    gt_ok = len(gt) == expected if split != "train" else len(gt) <= expected
    report.add(name, "ground-truth length", gt_ok, f"{len(gt)} entries for {expected} frames")
    if size is not None:
        w, h = size
        outside = [i for i, g in enumerate(gt) if is_present(g) and (g.x < 0 or g.y < 0 or g.x2 > w or g.y2 > h)]
        report.add(name, "box within image", not outside,
                   f"frames {outside[:10]}" if outside else "")
    if (path / ATTRIBUTES_FILE).is_file():
        try:
            flags = _read_raw_attribute_rows(path / ATTRIBUTES_FILE)
        except DatasetError as e:
            report.add(name, "attribute-table shape", False, str(e))
            return
        shape_ok = flags.shape == (len(AttributeId), expected)
        report.add(name, "attribute-table shape", shape_ok, f"{flags.shape}")
        bad = nan_exclusivity_violations(flags)
        report.add(name, "NaN exclusivity", bad.size == 0, f"frames {bad[:10].tolist()}" if bad.size else "")


def _read_raw_attribute_rows(path: Path) -> np.ndarray:
    """Attribute rows without the exclusivity check, so validation can report it."""
    rows = {}
    for i, line in enumerate(path.read_text().splitlines()):
        if not line.strip():
            continue
        name, *vals = line.strip().split(",")
        if name not in AttributeId.__members__:
            raise DatasetError(f"{path}:{i + 1}: unknown attribute {name!r}")
        if any(v not in ("0", "1") for v in vals):
            raise DatasetError(f"{path}:{i + 1}: attribute values must be 0 or 1")
        rows[AttributeId[name]] = [v == "1" for v in vals]
    if set(rows) != set(AttributeId) or len({len(v) for v in rows.values()}) != 1:
        raise DatasetError(f"{path}: expected 15 equal-length attribute rows")
    return np.array([rows[a] for a in AttributeId], dtype=bool)


def validate_dataset(root: str | Path, sample_all: bool = True) -> ValidationReport:
    """Check every sequence of every split found under ``root``. Never raises on bad content."""
    root = Path(root)
    report = ValidationReport()
    splits = [s for s in SPLITS if (root / s).is_dir()]
    if not splits:
        report.add(str(root), "layout", False, "no train/ or test/ split directory")
        return report
    for split in splits:
        try:
            names = sequence_names(root, split)
        except DatasetError as e:
            report.add(split, "layout", False, str(e))
            continue
        for n in names:
            p = root / split / n
            if not p.is_dir():
                report.add(f"{split}/{n}", "layout", False, "listed sequence directory missing")
                continue
            _validate_sequence(p, split, report, sample_all)
    return report


def write_list(root: Path, split: str, names: Sequence[str]):
    (root / split).mkdir(parents=True, exist_ok=True)
    (root / split / LIST_FILE).write_text("".join(n + "\n" for n in names))

