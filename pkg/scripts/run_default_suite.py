#!/usr/bin/env python3
"""Run every shipped config twice, compare the data CSVs byte for byte, print the report.

Usage: python scripts/run_default_suite.py [--out runs/suite] [--configs configs]
"""

import argparse
import sys
from pathlib import Path

from nlamp.suite import run_twice, suite_report

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "runs" / "suite"))
    ap.add_argument("--configs", default=str(ROOT / "configs"))
    args = ap.parse_args()
    _, bad = run_twice(Path(args.configs), Path(args.out))
    if bad:
        print("non-deterministic outputs:", ", ".join(bad))
    text, status = suite_report(Path(args.out) / "first")
    (Path(args.out) / "first" / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return 1 if any(s != "PASS" for s in status.values()) else 0


if __name__ == "__main__":
    sys.exit(main())
