#!/usr/bin/env python3
"""Generate the bundled two-sinusoid corpus (or a custom spec) as a CSV.

Usage:
    python3 scripts/make_synthetic.py out.csv [--rows N] [--spec spec.json]

With --spec the JSON file is forwarded to the `mff synth` command; without
it the default desk-scale corpus is written.
"""

import argparse
import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from mffftnet.cli import main as mff_main  # noqa: E402

DEFAULT_SPEC = {
    "seed": 7,
    "features": [
        {"waves": [[24, 1.0, 0.0], [12, 0.5, 0.7]], "noise_std": 0.05},
        {"waves": [[16, 1.0, 1.1]], "noise_std": 0.05},
    ],
}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out")
    ap.add_argument("--rows", type=int, default=1600)
    ap.add_argument("--spec", default=None)
    args = ap.parse_args()
    if args.spec:
        spec_path = args.spec
    else:
        spec = dict(DEFAULT_SPEC, n=args.rows)
        tmp = tempfile.NamedTemporaryFile(
            "w", suffix=".json", delete=False, encoding="utf-8"
        )
        json.dump(spec, tmp)
        tmp.close()
        spec_path = tmp.name
    return mff_main(["synth", spec_path, args.out])


if __name__ == "__main__":
    raise SystemExit(main())
