#!/usr/bin/env python3
"""Solver sweep on the small-planet / small-walker presets.

Benchmarks all six solvers on seeded scenarios against the squeaky-wheel
lower bound and prints the summary table (gap, wall time, message volume).

Usage: python scripts/bench_small.py --preset small-walker [--count 10] [--out DIR]
"""

import argparse
import sys
import tempfile
from pathlib import Path

from cosched.cli import main as cli_main


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--preset", choices=("small-planet", "small-walker"), required=True)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    out = Path(args.out) if args.out else Path(tempfile.mkdtemp(prefix=f"{args.preset}-bench-"))
    scen, res = out / "scenarios", out / "results"
    rc = cli_main(
        ["generate", "--preset", args.preset, "--count", str(args.count), "--out", str(scen)]
    )
    if rc:
        return rc
    rc = cli_main(["bench", "--scenarios", str(scen), "--out", str(res), "--oracle", "swo"])
    print(f"\nrun records and traces: {res}")
    return rc


if __name__ == "__main__":
    sys.exit(main())
