"""Command-line entry point: ``spt-rgbd <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

log = logging.getLogger("spt_rgbd")


def _emit(args, payload: dict, human: str):
    if args.json:
        print(json.dumps(payload, indent=1))
    else:
        print(human)


def cmd_validate(args) -> int:
    from spt_rgbd.dataset_io import validate_dataset

    report = validate_dataset(args.root, sample_all=not args.quick)
    lines = [f"{'PASS' if e.passed else 'FAIL'}  {e.sequence:<24} {e.check:<24} {e.detail}"
             for e in report.entries if args.verbose or not e.passed]
    lines.append(f"{len(report.entries) - len(report.failures())}/{len(report.entries)} checks passed")
    _emit(args, report.to_dict(), "\n".join(lines))
    return 0 if report.ok else 1


def cmd_synth(args) -> int:
    from spt_rgbd.synth import load_config_file, write_synth_dataset

    configs = load_config_file(args.config)
    write_synth_dataset(configs, args.root)
    names = [c.name for c in configs]
    _emit(args, {"root": str(args.root), "sequences": names},
          f"wrote {len(names)} sequences to {args.root}")
    return 0


def cmd_track(args) -> int:
    from spt_rgbd.dataset_io import load_dataset, write_results
    from spt_rgbd.tracker import make_tracker, run_sequence

    tracker = make_tracker(args.model)
    name = args.name or (args.model if args.model in ("oracle", "static") else Path(args.model).stem)
    out_dir = Path(args.out) / name
    written = []
    for seq in load_dataset(args.root, args.split):
        preds = run_sequence(tracker, seq)
        write_results(out_dir / f"{seq.id}.txt", preds)
        written.append(seq.id)
        log.info("tracked %s (%d frames)", seq.id, seq.frame_count)
    _emit(args, {"tracker": name, "out": str(out_dir), "sequences": written},
          f"{name}: wrote results for {len(written)} sequences to {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    from spt_rgbd.evaluation import evaluate_dataset, format_table

    bundle = evaluate_dataset(args.results, args.root, mode=args.mode, split=args.split)
    if args.out:
        bundle.save(args.out)
    payload = {"rows": bundle.rows(), "mode": bundle.mode, "bundle": str(args.out) if args.out else None}
    _emit(args, payload, format_table(bundle))
    return 0


def cmd_report(args) -> int:
    from spt_rgbd.evaluation import ReportBundle, format_table, write_report

    bundle = ReportBundle.load(args.bundle)
    files = write_report(bundle, args.out)
    _emit(args, {"files": [str(f) for f in files]},
          format_table(bundle) + "\n" + "\n".join(f"wrote {f}" for f in files))
    return 0


def cmd_train(args) -> int:
    from spt_rgbd.training import run_training_config

    summary = run_training_config(args.config)
    _emit(args, summary,
          f"trained {summary['steps']} steps: loss {summary['initial_loss']:.4f} -> {summary['final_loss']:.4f}, "
          f"mean IoU {summary['mean_iou']:.3f}; checkpoint {summary['checkpoint']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spt-rgbd", description=__doc__)
    p.add_argument("--json", action="store_true", help="machine-readable JSON output")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a dataset tree")
    s.add_argument("root")
    s.add_argument("--quick", action="store_true", help="probe only first/middle/last frames")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("synth", help="generate a synthetic dataset from a JSON config")
    s.add_argument("config")
    s.add_argument("root")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("track", help="run a tracker over every sequence of a split")
    s.add_argument("model", help="checkpoint path, 'oracle' or 'static'")
    s.add_argument("root")
    s.add_argument("out")
    s.add_argument("--split", default="test")
    s.add_argument("--name", help="tracker name (results subdirectory)")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("evaluate", help="precision/recall/F-score of result files")
    s.add_argument("results")
    s.add_argument("root")
    s.add_argument("--split", default="test")
    s.add_argument("--mode", choices=("sequence", "frame"), default="sequence")
    s.add_argument("--out", help="write the report bundle (JSON) here")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("report", help="write tables and attribute plot data from a bundle")
    s.add_argument("bundle")
    s.add_argument("out")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("train", help="train SPT from a JSON config")
    s.add_argument("config")
    s.set_defaults(func=cmd_train)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse already printed usage
        return int(e.code or 0) if e.code not in (None, 0) else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except Exception as e:  # every failure becomes a one-line message and a nonzero status
        if args.verbose:
            log.exception("command failed")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
