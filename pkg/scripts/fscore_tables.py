"""Recompute F = 2PR/(P+R) for every published (Pr, Re, F) row and flag rows off by more than 0.001."""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from published_tables import ROWS  # noqa: E402

from spt_rgbd.metrics import f_measure  # noqa: E402


def main() -> int:
    bad = 0
    print(f"{'table':<22} {'tracker':<12} {'Pr':>6} {'Re':>6} {'F':>6} {'2PR/(P+R)':>10}")
    for table, tracker, pr, re, f in ROWS:
        got = f_measure(pr, re)
        flag = "" if abs(got - f) <= 1e-3 + 1e-12 else "  <-- off by %.4f" % (got - f)
        bad += bool(flag)
        print(f"{table:<22} {tracker:<12} {pr:6.3f} {re:6.3f} {f:6.3f} {got:10.4f}{flag}")
    print(f"{len(ROWS) - bad}/{len(ROWS)} rows consistent")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
