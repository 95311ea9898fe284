"""Default suite: every shipped config, run twice, with a byte-level determinism check."""

from __future__ import annotations

import filecmp
from pathlib import Path
from typing import Optional

from .cli import build_report, collect_checks, run_config, write_csv
from .config import EXPERIMENTS, load_config

DEFAULT_CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"
# metadata.txt carries the timestamp; summary.txt and report.txt are prose
DATA_SUFFIX = ".csv"


def run_suite(config_dir: Path, out_dir: Path, experiments=EXPERIMENTS) -> dict:
    results = {}
    for exp in experiments:
        cfg = load_config(Path(config_dir) / f"{exp}.cfg")
        result, _ = run_config(cfg, Path(out_dir) / exp)
        results[exp] = result
    return results


def compare_data(a: Path, b: Path) -> list[str]:
    """Relative paths of data CSVs that differ (or exist on one side only)."""
    fa = {p.relative_to(a) for p in Path(a).rglob(f"*{DATA_SUFFIX}")}
    fb = {p.relative_to(b) for p in Path(b).rglob(f"*{DATA_SUFFIX}")}
    bad = sorted(str(p) for p in fa ^ fb)
    for rel in sorted(fa & fb):
        if not filecmp.cmp(Path(a) / rel, Path(b) / rel, shallow=False):
            bad.append(str(rel))
    return bad


def run_twice(config_dir: Optional[Path], out_dir: Path, experiments=EXPERIMENTS) -> tuple[dict, list[str]]:
    """Run the suite into ``out/first`` and ``out/second``; record the determinism check in ``out/first``."""
    config_dir = Path(config_dir or DEFAULT_CONFIG_DIR)
    out_dir = Path(out_dir)
    first = run_suite(config_dir, out_dir / "first", experiments)
    run_suite(config_dir, out_dir / "second", experiments)
    bad = compare_data(out_dir / "first", out_dir / "second")
    det = out_dir / "first" / "determinism"
    det.mkdir(parents=True, exist_ok=True)
    write_csv(
        det / "checks.csv",
        ["criterion", "name", "status", "value", "threshold"],
        [[11, "byte_identical_data_csvs", "PASS" if not bad else "FAIL", len(bad), 0]],
    )
    return first, bad


def suite_report(out_dir: Path) -> tuple[str, dict]:
    return build_report(collect_checks(Path(out_dir)))
