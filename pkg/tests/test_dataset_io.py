import random
import shutil

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from PIL import Image

from spt_rgbd import dataset_io as dio
from spt_rgbd.core import ABSENT, UNANNOTATED, AttributeId, AttributeTable, BoundingBox, Prediction


def test_parse_groundtruth_lines():
    assert dio.parse_groundtruth_line("1,2,3,4") == BoundingBox(1, 2, 3, 4)
    assert dio.parse_groundtruth_line("nan,nan,nan,nan") is ABSENT
    assert dio.parse_groundtruth_line("") is UNANNOTATED
    for bad in ("1,2,3", "1,2,3,x", "1,nan,3,4", "1,2,0,4", "1,2,inf,4"):
        with pytest.raises(dio.DatasetError):
            dio.parse_groundtruth_line(bad, "gt.txt:7")


def test_groundtruth_error_names_line(tmp_path):
    p = tmp_path / "groundtruth.txt"
    p.write_text("1,2,3,4\n1,2,3\n")
    with pytest.raises(dio.DatasetError, match="groundtruth.txt:2"):
        dio.read_groundtruth(p)


def test_prediction_parsing():
    p = dio.parse_prediction_line("1.0,2.0,3.0,4.0,0.9")
    assert p.box == BoundingBox(1, 2, 3, 4) and p.confidence == 0.9
    with pytest.raises(dio.DatasetError):
        dio.parse_prediction_line("1.0,2.0,3.0,4.0")
    with pytest.raises(dio.DatasetError):
        dio.parse_prediction_line("1.0,2.0,3.0,4.0,nan")


def test_results_roundtrip_bit_exact(tmp_path):
    rng = random.Random(0)
    preds = [Prediction(BoundingBox(rng.uniform(-9, 99), rng.uniform(0, 99), rng.uniform(0.1, 50),
                                    rng.uniform(0.1, 50)), rng.random()) for _ in range(50)]
    path = tmp_path / "res" / "seq.txt"
    dio.write_results(path, preds)
    assert dio.read_results(path) == preds


@given(st.lists(st.one_of(
    st.just(ABSENT),
    st.builds(BoundingBox, st.floats(-1e4, 1e4), st.floats(-1e4, 1e4), st.floats(1e-3, 1e4), st.floats(1e-3, 1e4)),
), min_size=1, max_size=30))
def test_groundtruth_roundtrip(entries):
    text = "".join(dio.format_groundtruth_entry(e) + "\n" for e in entries)
    back = [dio.parse_groundtruth_line(line) for line in text.splitlines()]
    assert back == entries


def _random_table(rng: np.random.Generator, n: int) -> AttributeTable:
    flags = rng.random((15, n)) < 0.2
    flags[int(AttributeId.NaN)] = ~flags[:14].any(axis=0)
    return AttributeTable(flags)


def test_attribute_table_roundtrip(tmp_path):
    table = _random_table(np.random.default_rng(1), 40)
    p = tmp_path / "attributes.csv"
    dio.write_attribute_table(p, table)
    assert np.array_equal(dio.read_attribute_table(p, 40).flags, table.flags)


def test_attribute_table_errors(tmp_path):
    table = _random_table(np.random.default_rng(2), 10)
    p = tmp_path / "attributes.csv"
    dio.write_attribute_table(p, table)
    lines = p.read_text().splitlines()

    p.write_text("\n".join(line for line in lines if not line.startswith("OF,")) + "\n")
    with pytest.raises(dio.DatasetError, match="OF"):
        dio.read_attribute_table(p)

    p.write_text("\n".join(f"{a.name}," + ",".join("0" * 10) for a in AttributeId) + "\n")
    with pytest.raises(dio.DatasetError, match="exclusivity"):
        dio.read_attribute_table(p)

    p.write_text("\n".join(lines[:-1] + [lines[-1].replace("1", "2", 1).replace("0", "2", 1)]) + "\n")
    with pytest.raises(dio.DatasetError):
        dio.read_attribute_table(p)

    p.write_text("\n".join(lines + [lines[0]]) + "\n")
    with pytest.raises(dio.DatasetError, match="duplicate"):
        dio.read_attribute_table(p)

    dio.write_attribute_table(p, table)
    with pytest.raises(dio.DatasetError, match="columns"):
        dio.read_attribute_table(p, n_frames=11)


def _write_plain_sequence(path, n, gt, depth_dtype=np.uint16):
    rgb = np.zeros((24, 32, 3), np.uint8)
    (path / "rgb").mkdir(parents=True)
    (path / "depth").mkdir()
    for i in range(n):
        dio.save_rgb(path / "rgb" / dio.frame_name(i, "jpg"), rgb)
        Image.fromarray(np.full((24, 32), 100, depth_dtype)).save(path / "depth" / dio.frame_name(i, "png"))
    dio.write_groundtruth(path / dio.GROUNDTRUTH_FILE, gt)


def test_train_sequence_with_unannotated_tail(tmp_path):
    seq_dir = tmp_path / "train" / "long"
    gt = [BoundingBox(1, 1, 5, 5)] * 600
    _write_plain_sequence(seq_dir, 640, gt)
    seq = dio.load_sequence(seq_dir)
    assert seq.frame_count == 640
    assert seq.annotated_prefix() == 600
    assert sum(g is not UNANNOTATED for g in seq.groundtruth) == 600
    assert all(g is UNANNOTATED for g in seq.groundtruth[600:])


def test_test_sequence_absent_and_mismatch(tmp_path):
    seq_dir = tmp_path / "test" / "a"
    _write_plain_sequence(seq_dir, 3, [BoundingBox(1, 1, 5, 5), ABSENT, BoundingBox(2, 2, 5, 5)])
    seq = dio.load_sequence(seq_dir)
    assert seq.groundtruth[1] is ABSENT
    assert seq.rgb(0).shape == (24, 32, 3) and seq.depth(0).dtype == np.uint16

    (seq_dir / "depth" / dio.frame_name(2, "png")).unlink()
    with pytest.raises(dio.DatasetError, match="rgb has 3 frames but depth has 2"):
        dio.load_sequence(seq_dir)


def test_test_sequence_rejects_blank_lines(tmp_path):
    seq_dir = tmp_path / "test" / "a"
    _write_plain_sequence(seq_dir, 2, [BoundingBox(1, 1, 5, 5), UNANNOTATED])
    (seq_dir / dio.GROUNDTRUTH_FILE).write_text("1,1,5,5\n\n")
    with pytest.raises(dio.DatasetError, match=":2"):
        dio.load_sequence(seq_dir)


def test_png_bit_depth(tmp_path):
    dio.save_depth(tmp_path / "d16.png", np.full((4, 4), 1000, np.uint16))
    Image.fromarray(np.zeros((4, 4), np.uint8)).save(tmp_path / "d8.png")
    assert dio.png_bit_depth(tmp_path / "d16.png") == 16
    assert dio.png_bit_depth(tmp_path / "d8.png") == 8


def test_validate_clean(synth_root):
    report = dio.validate_dataset(synth_root)
    assert report.ok, report.failures()
    checks = {e.check for e in report.entries}
    assert {"depth bit-depth", "NaN exclusivity", "frame-count alignment"} <= checks


def test_validate_8bit_depth(synth_root, tmp_path):
    root = tmp_path / "data"
    shutil.copytree(synth_root, root)
    seq = sorted(p for p in (root / "test").iterdir() if p.is_dir())[0]
    frame = sorted((seq / "depth").iterdir())[3]
    Image.fromarray(np.zeros((120, 160), np.uint8)).save(frame)
    report = dio.validate_dataset(root)
    fails = report.failures()
    assert [f.check for f in fails] == ["depth bit-depth"]
    assert frame.name in fails[0].detail


def test_validate_nan_exclusivity(synth_root, tmp_path):
    root = tmp_path / "data"
    shutil.copytree(synth_root, root)
    seq = sorted(p for p in (root / "test").iterdir() if p.is_dir())[1]
    path = seq / dio.ATTRIBUTES_FILE
    rows = [line.split(",") for line in path.read_text().splitlines()]
    so = next(r for r in rows if r[0] == "SO")
    nan = next(r for r in rows if r[0] == "NaN")
    so[1] = nan[1] = "1"
    path.write_text("\n".join(",".join(r) for r in rows) + "\n")
    before = path.read_text()
    fails = dio.validate_dataset(root).failures()
    assert [f.check for f in fails] == ["NaN exclusivity"]
    assert path.read_text() == before  # validation does not touch files


def test_sequence_names_from_list(tmp_path):
    dio.write_list(tmp_path, "test", ["b", "a"])
    assert dio.sequence_names(tmp_path, "test") == ["b", "a"]
    with pytest.raises(dio.DatasetError):
        dio.sequence_names(tmp_path, "train")
