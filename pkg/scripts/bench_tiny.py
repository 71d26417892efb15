#!/usr/bin/env python3
"""Exact-oracle benchmark on the tiny preset.

Generates N seeded tiny scenarios, solves each with every solver, and prints
the mean optimality gap against the proven branch-and-bound optimum.

Usage: python scripts/bench_tiny.py [--count 30] [--out results/tiny]
"""

import argparse
import sys
import tempfile
from pathlib import Path

from cosched.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=30)
    ap.add_argument("--out", default=None, help="results directory (default: temp)")
    args = ap.parse_args()

    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix="tiny-bench-"))
    scen = out / "scenarios"
    res = out / "results"
    rc = cli_main(["generate", "--preset", "tiny", "--count", str(args.count), "--out", str(scen)])
    if rc:
        return rc
    rc = cli_main(["bench", "--scenarios", str(scen), "--out", str(res), "--oracle", "bnb"])
    print(f"\nrun records and traces: {res}")
    return rc


if __name__ == "__main__":
    sys.exit(main())
