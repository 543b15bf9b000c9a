"""Generate a synthetic dataset, run the oracle and static trackers, evaluate and write a report."""

import argparse
import tempfile
from pathlib import Path

from spt_rgbd import dataset_io, synth
from spt_rgbd.evaluation import evaluate_dataset, format_table, write_report
from spt_rgbd.tracker import run_sequence

CONFIG = Path(__file__).parent / "configs" / "synth_demo.json"


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--config", default=str(CONFIG))
    p.add_argument("--out", help="working directory (default: a temporary one)")
    args = p.parse_args()
    work = Path(args.out or tempfile.mkdtemp(prefix="spt_demo_"))

    data = work / "data"
    synth.write_synth_dataset(synth.load_config_file(args.config), data)
    report = dataset_io.validate_dataset(data)
    print(f"validation: {len(report.entries) - len(report.failures())}/{len(report.entries)} checks passed")

    for name in ("oracle", "static"):
        for seq in dataset_io.load_dataset(data):
            dataset_io.write_results(work / "results" / name / f"{seq.id}.txt", run_sequence(name, seq))

    bundle = evaluate_dataset(work / "results", data)
    print(format_table(bundle))
    for f in write_report(bundle, work / "report"):
        print(f"wrote {f}")


if __name__ == "__main__":
    main()
