#!/usr/bin/env python3
"""Train and score the ablation variants on one dataset.

Usage:
    python3 scripts/run_ablation.py data.csv [--out ablation.json]
        [--variants full,wo-da,...] [--epochs N] [--seed S]

Each variant is trained from scratch under the same seed and scored with
the ridge probe; the table is printed and the rows written as JSON.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mffftnet.cli import ABLATION_VARIANTS, main as mff_main  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("data")
    ap.add_argument("--out", default="ablation.json")
    ap.add_argument("--variants", default=",".join(ABLATION_VARIANTS))
    ap.add_argument("--epochs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cmd = [
        "ablate",
        args.data,
        "--variants",
        args.variants,
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
