#!/usr/bin/env python3
"""Run a full evaluation from an experiment config and print the summary.

Usage:
    python scripts/run_evaluation.py configs/ci.json [out_dir]

Equivalent to ``prnukit evaluate --config <config> --out <out_dir>`` but
handy when working from a checkout.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from prnukit.cli import main  # noqa: E402


if __name__ == "__main__":
    if len(sys.argv) < 2:
        print(__doc__)
        sys.exit(2)
    argv = ["evaluate", "--config", sys.argv[1]]
    if len(sys.argv) > 2:
        argv += ["--out", sys.argv[2]]
    sys.exit(main(argv))
