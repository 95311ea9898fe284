import csv
import re
from pathlib import Path

import pytest

from nlamp.cli import format_value, main
from nlamp.config import load_config
from nlamp.errors import ConfigError
from nlamp.suite import compare_data
from nlamp.workers import ENV_VAR, ordered_map, worker_count

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def _write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


AMP = """
[run]
experiment = amplification
output = out

[grid]
dimension = 1
points = 1024
extent = 20

[generator]
nonlinearity = {kind}
strength = {strength}

[sweep]
r = {r}
controls = kostin
"""


def test_negative_r_is_a_config_error_naming_the_field(tmp_path, capsys):
    cfg = _write(tmp_path, AMP.format(kind="dg", strength=0.1, r="10, -100, 1000"))
    assert main(["run", str(cfg)]) == 2
    err = capsys.readouterr().err
    assert "[sweep] r" in err


@pytest.mark.parametrize(
    "patch,field",
    [
        (("experiment = amplification", "experiment = nonsense"), "[run] experiment"),
        (("points = 1024", "points = many"), "[grid] points"),
        (("nonlinearity = dg", "nonlinearity = cubic"), "[generator] nonlinearity"),
        (("controls = kostin", "controls = kostin\n[tolerances]\nbogus = 1"), "[tolerances] bogus"),
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, patch, field):
    text = AMP.format(kind="dg", strength=0.1, r="10, 100, 1000").replace(*patch)
    assert main(["run", str(_write(tmp_path, text))]) == 2
    assert field in capsys.readouterr().err


def test_missing_config_and_bad_usage(tmp_path):
    assert main(["run", str(tmp_path / "nope.cfg")]) == 2
    assert main([]) == 2
    assert main(["frobnicate"]) == 2


def test_linear_amplification_is_a_control(tmp_path):
    text = AMP.format(kind="linear", strength=0, r="10, 31.6227766, 100, 316.227766, 1000")
    cfg = _write(tmp_path, text.replace("points = 1024", "points = 2048"))
    assert main(["run", str(cfg)]) == 0
    out = tmp_path / "out"
    summary = (out / "summary.txt").read_text()
    assert "(control)" in summary
    assert re.search(r"^slope: 0$", summary, re.M)
    rows = list(csv.DictReader(open(out / "checks.csv")))
    assert all(r["criterion"] == "4" and r["status"] == "PASS" for r in rows)


def test_numerical_failure_exits_1(tmp_path, capsys):
    text = AMP.format(kind="dg", strength=0.1, r="10, 100, 10000")
    assert main(["run", str(_write(tmp_path, text))]) == 1
    assert "QuadratureError" in capsys.readouterr().err


def test_shipped_asymptotics_config(tmp_path):
    assert main(["run", str(CONFIGS / "asymptotics.cfg"), "-o", str(tmp_path / "a")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "a" / "expansion.csv")))
    for r in rows:
        assert float(r["a"]) == pytest.approx(float(r["a_expected"]), rel=0.005)
        assert float(r["b"]) == pytest.approx(float(r["b_expected"]), rel=0.02)
    meta = (tmp_path / "a" / "metadata.txt").read_text()
    assert "timestamp:" in meta and "generator.epsilon" in meta


def test_report_merges_and_marks_skipped(tmp_path, capsys):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", str(empty)]) == 2
    assert main(["report", str(tmp_path / "missing")]) == 2
    assert main(["run", str(CONFIGS / "scales.cfg"), "-o", str(tmp_path / "runs" / "scales")]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path / "runs")]) == 0
    text = capsys.readouterr().out
    assert re.search(r"criterion 10 PASS", text)
    assert re.search(r"criterion  3 SKIPPED", text)
    assert (tmp_path / "runs" / "report.txt").exists()


def test_scales_subcommand(tmp_path, capsys):
    assert main(["scales", "--nu", "1e-20", "--csv", str(tmp_path / "s.csv")]) == 0
    assert "fundamental_length" in capsys.readouterr().out
    assert (tmp_path / "s.csv").read_text().startswith("quantity,value,units,reference")
    assert main(["scales", "--nu", "-1"]) == 2


def test_repeated_runs_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["run", str(CONFIGS / "scales.cfg"), "-o", str(tmp_path / d)]) == 0
    assert compare_data(tmp_path / "a", tmp_path / "b") == []


def test_format_value():
    assert format_value(0.1) == "1.0000000000000001e-01"
    assert format_value(3) == "3"
    assert format_value(float("nan")) == "nan"
    assert format_value("x") == "x"


def test_output_path_resolved_relative_to_config(tmp_path):
    sub = tmp_path / "cfgs"
    sub.mkdir()
    cfg = load_config(_write(sub, "[run]\nexperiment = scales\noutput = ../o\n"))
    assert cfg.output == (tmp_path / "o").resolve()
    with pytest.raises(ConfigError):
        load_config(_write(sub, "[grid]\npoints = 3\n", "x.cfg"))


def test_worker_cap(monkeypatch):
    monkeypatch.setenv(ENV_VAR, "3")
    assert worker_count() == 3
    items = list(range(10))
    assert ordered_map(lambda x: x * x, items) == [x * x for x in items]
    monkeypatch.setenv(ENV_VAR, "zero")
    with pytest.raises(ValueError):
        worker_count()


def test_bad_thread_env_is_a_usage_error(monkeypatch, capsys):
    monkeypatch.setenv(ENV_VAR, "-2")
    assert main(["run", str(CONFIGS / "scales.cfg")]) == 2
    assert ENV_VAR in capsys.readouterr().err
