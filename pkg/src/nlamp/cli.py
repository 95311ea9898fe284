"""Command-line driver: ``nlamp run <cfg>``, ``nlamp report <dir>``, ``nlamp scales``.

Exit codes: 0 success, 1 a check failed (or a numerical invariant was
violated), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from . import scales as sc
from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    EmptyMixtureError,
    FitConditioningError,
    IntegrationError,
    QuadratureError,
    SingularPointError,
    UnitError,
)
from .experiments import CRITERIA, RUNNERS, ExperimentResult
from .workers import worker_count

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
_NUMERICAL_ERRORS = (
    EmptyMixtureError,
    FitConditioningError,
    IntegrationError,
    QuadratureError,
    SingularPointError,
    UnitError,
)


def format_value(v) -> str:
    """CSV cell: floats in scientific notation with 17 significant digits."""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    try:
        import numpy as np

        if isinstance(v, np.integer):
            return str(int(v))
        if isinstance(v, np.floating):
            return format_value(float(v))
    except ImportError:  # pragma: no cover
        pass
    return str(v)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(x) for x in row])


def write_outputs(cfg: RunConfig, result: ExperimentResult, out: Optional[Path] = None) -> Path:
    """Data CSVs, ``checks.csv``, ``summary.txt`` and ``metadata.txt`` (the only timestamped file)."""
    out = Path(out or cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    for name, table in result.tables.items():
        write_csv(out / name, table.header, table.rows)
    write_csv(
        out / "checks.csv",
        ["criterion", "name", "status", "value", "threshold"],
        [["" if c.criterion is None else c.criterion, c.name, c.status, c.value, c.threshold] for c in result.checks],
    )
    lines = [f"experiment: {result.experiment}", ""]
    lines += result.summary
    lines += [""] + [f"[{c.status}] {c.name}: {format_value(c.value)} (threshold {format_value(c.threshold)})"
                     for c in result.checks]
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    meta = [
        f"timestamp: {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}",
        f"version: {__version__}",
        f"python: {sys.version.split()[0]}",
        f"config: {cfg.source}",
        f"workers: {worker_count()}",
    ]
    try:
        import numpy, scipy

        meta += [f"numpy: {numpy.__version__}", f"scipy: {scipy.__version__}"]
    except ImportError:  # pragma: no cover
        pass
    meta += [f"{k}: {v}" for k, v in cfg.parameters().items()]
    (out / "metadata.txt").write_text("\n".join(meta) + "\n", encoding="utf-8")
    return out


def run_config(cfg: RunConfig, out: Optional[Path] = None) -> tuple[ExperimentResult, Path]:
    result = RUNNERS[cfg.experiment](cfg)
    return result, write_outputs(cfg, result, out)


def cmd_run(args) -> int:
    try:
        worker_count()
        cfg = load_config(args.config, args.output)
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result, out = run_config(cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except _NUMERICAL_ERRORS as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    for c in result.checks:
        tag = "" if c.criterion is None else f"C{c.criterion} "
        print(f"[{c.status}] {tag}{c.name}: {format_value(c.value)}")
    print(f"outputs written to {out}")
    return EXIT_OK if result.passed else EXIT_FAIL


def collect_checks(directory: Path) -> list[dict]:
    rows = []
    for path in sorted(directory.rglob("checks.csv")):
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                row["source"] = str(path.parent.relative_to(directory))
                rows.append(row)
    return rows


def build_report(rows: list[dict]) -> tuple[str, dict]:
    status = {}
    lines = []
    for k, label in CRITERIA.items():
        mine = [r for r in rows if r.get("criterion") == str(k)]
        if not mine:
            status[k] = "SKIPPED"
        elif all(r["status"] == "PASS" for r in mine):
            status[k] = "PASS"
        else:
            status[k] = "FAIL"
        lines.append(f"criterion {k:2d} {status[k]:<7} {label}")
        for r in mine:
            lines.append(f"    [{r['status']}] {r['source']}/{r['name']}: {r['value']} (threshold {r['threshold']})")
    other = [r for r in rows if not r.get("criterion")]
    if other:
        lines.append("additional checks")
        for r in other:
            lines.append(f"    [{r['status']}] {r['source']}/{r['name']}: {r['value']} (threshold {r['threshold']})")
    return "\n".join(lines) + "\n", status


def cmd_report(args) -> int:
    d = Path(args.directory)
    if not d.is_dir():
        print(f"error: {d} is not a directory", file=sys.stderr)
        return EXIT_USAGE
    rows = collect_checks(d)
    if not rows:
        print(f"error: no run outputs (checks.csv) under {d}", file=sys.stderr)
        return EXIT_USAGE
    text, status = build_report(rows)
    (d / "report.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    failed = any(s == "FAIL" for s in status.values()) or any(
        r["status"] == "FAIL" for r in rows if not r.get("criterion")
    )
    return EXIT_FAIL if failed else EXIT_OK


def cmd_scales(args) -> int:
    try:
        c = sc.PhysicalConstants(planck_length=args.planck_length)
        rows = sc.scales_table(c, args.nu, args.L, args.r)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    print(sc.format_table(rows))
    if args.csv:
        Path(args.csv).write_text(sc.table_csv(rows), encoding="utf-8")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nlamp", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a config file")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="output directory (overrides [run] output)")
    r.set_defaults(func=cmd_run)
    rep = sub.add_parser("report", help="merge checks from run outputs into a per-criterion summary")
    rep.add_argument("directory")
    rep.set_defaults(func=cmd_report)
    s = sub.add_parser("scales", help="print the scales table")
    s.add_argument("--nu", type=float, default=1e-20)
    s.add_argument("--L", type=float, default=None, help="wavelength in cm")
    s.add_argument("--r", type=float, default=None, help="sharpness in cm^-2 (default 1/L_p^2)")
    s.add_argument("--planck-length", type=float, default=1.6e-33)
    s.add_argument("--csv", help="also write the table as CSV")
    s.set_defaults(func=cmd_scales)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
