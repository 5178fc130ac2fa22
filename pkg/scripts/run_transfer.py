#!/usr/bin/env python3
"""Transfer run: pretrain on one corpus, fine-tune and evaluate on another.

Usage:
    python3 scripts/run_transfer.py pretrain.csv finetune.csv
        [--pretrain-epochs N] [--finetune-epochs M] [--reinit-input]
        [--report transfer.json]

Use --reinit-input when the two corpora have different feature counts;
only the input linear layer is re-initialized, everything else transfers.
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mffftnet.cli import main as mff_main  # noqa: E402


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("pretrain_data")
    ap.add_argument("finetune_data")
    ap.add_argument("--pretrain-epochs", type=int, default=None)
    ap.add_argument("--finetune-epochs", type=int, default=None)
    ap.add_argument("--reinit-input", action="store_true")
    ap.add_argument("--report", default="transfer.json")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    cmd = [
        "transfer",
        args.pretrain_data,
        args.finetune_data,
        "--report",
        args.report,
        "--profile",
        "desk",
        "--seed",
        str(args.seed),
    ]
    if args.pretrain_epochs is not None:
        cmd += ["--pretrain-epochs", str(args.pretrain_epochs)]
    if args.finetune_epochs is not None:
        cmd += ["--finetune-epochs", str(args.finetune_epochs)]
    if args.reinit_input:
        cmd.append("--reinit-input")
    return mff_main(cmd)


if __name__ == "__main__":
    raise SystemExit(main())
