#!/usr/bin/env python3
"""Robustness sweep: perturb the train split at several ratios and retrain.

Usage:
    python3 scripts/run_robustness.py data.csv --kind noise|missing
        [--ratios 0.1,0.2,0.3] [--out robustness.json] [--epochs N]

Noise draws are added to raw train-split cells before standardization;
missing cells are zeroed on standardized data (train-mean imputation).
A ratio-0 baseline row is always included.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mffftnet.cli import main as mff_main  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("data")
    ap.add_argument("--kind", required=True, choices=["noise", "missing"])
    ap.add_argument("--ratios", default="0.1,0.2,0.3")
    ap.add_argument("--out", default="robustness.json")
    ap.add_argument("--epochs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cmd = [
        "robustness",
        args.data,
        "--kind",
        args.kind,
        "--ratios",
        args.ratios,
        "--out",
        args.out,
        "--profile",
        "desk",
        "--seed",
        str(args.seed),
    ]
    if args.epochs is not None:
        cmd += ["--train.epochs", str(args.epochs)]
    return mff_main(cmd)


if __name__ == "__main__":
    raise SystemExit(main())
