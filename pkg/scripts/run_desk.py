#!/usr/bin/env python3
"""Desk-scale end-to-end run: generate the bundled corpus, train the desk
profile, and evaluate the ridge probe at horizon 24.

Usage:
    python3 scripts/run_desk.py [--workdir DIR] [--epochs N] [--seed S]

Artifacts (CSV, checkpoint, training history, JSON report) land in the
work directory; the report table is printed at the end.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mffftnet.cli import main as mff_main  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--workdir", default="desk_run")
    ap.add_argument("--epochs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    work = Path(args.workdir)
    work.mkdir(parents=True, exist_ok=True)

    csv = work / "two_sine.csv"
    rc = mff_main(
        ["synth", str(Path(__file__).parent / "specs" / "two_sine.json"), str(csv)]
    )
    if rc:
        return rc

    train_args = [
        "train",
        str(csv),
        "--out",
        str(work / "model.bin"),
        "--history",
        str(work / "history.json"),
        "--profile",
        "desk",
        "--seed",
        str(args.seed),
    ]
    if args.epochs is not None:
        train_args += ["--train.epochs", str(args.epochs)]
    rc = mff_main(train_args)
    if rc:
        return rc

    return mff_main(
        [
            "eval",
            str(work / "model.bin"),
            str(csv),
            "--report",
            str(work / "report.json"),
            "--horizons",
            "24",
        ]
    )


if __name__ == "__main__":
    raise SystemExit(main())
