"""Run configuration: INI-style ``key = value`` files with section headers.

Sections
--------
``[run]``         experiment, output, seed
``[grid]``        dimension, points, extent
``[generator]``   nonlinearity, strength, mass, hbar, epsilon
``[integrator]``  dt, scheme, tolerance, substep
``[sweep]``       comma-separated lists: r, sigma_c, t, dimensions, test_functions, controls, ...
``[tolerances]``  named overrides of the default acceptance thresholds

Experiments may read further sections (``[toy]``, ``[envelope]``, ...);
see the shipped files under ``configs/``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import ConfigError
from .evolution import IntegratorConfig
from .generators import NONLINEARITIES, GeneratorSpec
from .grid import GridSpec

EXPERIMENTS = ("asymptotics", "amplification", "protocol", "evolve", "scales")

DEFAULT_TOLERANCES = {
    "moment_rel": 1e-6,
    "slope_rel": 0.005,
    "intercept_rel": 0.02,
    "residual_exponent_abs": 0.15,
    "ratio_low": 0.98,
    "ratio_high": 1.02,
    "amplification_residual_exponent": 0.1,
    "control_value": 1e-8,
    "control_slope": 1e-6,
    "no_signal": 1e-8,
    "no_signal_delayed": 1e-6,
    "momentum_branch": 1e-8,
    "epsilon_rel": 0.01,
    "envelope_rel": 0.05,
    "fd_rel": 0.05,
    "plane_wave": 1e-10,
    "hermiticity": 1e-8,
    "norm_drift": 1e-6,
    "schmidt": 1e-6,
    "scale_factor": 2.0,
    "roundtrip": 1e-12,
}


@dataclass
class RunConfig:
    experiment: str
    output: Path
    grid: Optional[GridSpec] = None
    generator: GeneratorSpec = field(default_factory=GeneratorSpec)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    sweeps: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    sections: dict = field(default_factory=dict)
    seed: int = 0
    source: Optional[Path] = None

    def sweep(self, key: str, default=None) -> list:
        if key in self.sweeps:
            return self.sweeps[key]
        if default is None:
            raise ConfigError(f"[sweep] {key} is required for experiment {self.experiment!r}")
        return list(default)

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})

    def parameters(self) -> dict:
        """Flat dict of every setting, for the metadata block."""
        out = {"run.experiment": self.experiment, "run.seed": self.seed}
        if self.grid is not None:
            out.update({"grid.dimension": self.grid.n, "grid.points": self.grid.points, "grid.extent": self.grid.extent})
        for k in ("nonlinearity", "strength", "mass", "hbar", "epsilon"):
            out[f"generator.{k}"] = getattr(self.generator, k)
        for k in ("dt", "scheme", "tolerance", "substep"):
            out[f"integrator.{k}"] = getattr(self.integrator, k)
        for k, v in self.sweeps.items():
            out[f"sweep.{k}"] = ", ".join(str(x) for x in v)
        for k, v in self.tolerances.items():
            out[f"tolerances.{k}"] = v
        for s, d in self.sections.items():
            for k, v in d.items():
                out[f"{s}.{k}"] = v
        return out


_FLOAT_SWEEPS = {"nu", "moment_r", "r", "sigma_c", "t", "t_nosignal", "momenta", "envelope_multiples", "epsilons"}
_INT_SWEEPS = {"dimensions", "moment_dimensions", "powers"}
_STR_SWEEPS = {"test_functions", "controls"}
_POSITIVE_SWEEPS = {"nu", "moment_r", "moment_dimensions", "r", "sigma_c", "t", "t_nosignal", "envelope_multiples", "dimensions"}


def _number(section: str, key: str, raw: str, kind=float):
    try:
        v = kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None
    if kind is float and not math.isfinite(v):
        raise ConfigError(f"[{section}] {key}: must be finite, got {raw!r}")
    return v


def _positive(section, key, v):
    if not v > 0:
        raise ConfigError(f"[{section}] {key}: must be positive, got {v}")
    return v


def _parse_list(key: str, raw: str) -> list:
    items = [x.strip() for x in raw.split(",") if x.strip()]
    if not items:
        raise ConfigError(f"[sweep] {key}: list is empty")
    if key in _STR_SWEEPS:
        return items
    kind = int if key in _INT_SWEEPS else float
    vals = [_number("sweep", key, x, kind) for x in items]
    if key in _POSITIVE_SWEEPS:
        for v in vals:
            _positive("sweep", key, v)
    return vals


def load_config(path, output: Optional[str] = None) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} not found")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigError(f"{path}: {e}") from None
    return parse_config(cp, path.parent, output, source=path)


def parse_config(cp: configparser.ConfigParser, base: Path, output: Optional[str] = None, source=None) -> RunConfig:
    if not cp.has_section("run"):
        raise ConfigError("[run] section is missing")
    run = cp["run"]
    exp = run.get("experiment", "").strip()
    if exp not in EXPERIMENTS:
        raise ConfigError(f"[run] experiment: must be one of {EXPERIMENTS}, got {exp!r}")
    out_raw = output if output is not None else run.get("output", f"out/{exp}")
    out = Path(out_raw)
    if not out.is_absolute():
        out = ((Path.cwd() if output is not None else base) / out).resolve()
    anchor = out
    while not anchor.exists():
        anchor = anchor.parent
    if not anchor.is_dir():
        raise ConfigError(f"[run] output: {str(anchor)!r} is not a directory")
    seed = int(_number("run", "seed", run.get("seed", "0"), int))

    grid = None
    if cp.has_section("grid"):
        g = cp["grid"]
        n = _positive("grid", "dimension", _number("grid", "dimension", g.get("dimension", "1"), int))
        pts = _positive("grid", "points", _number("grid", "points", g.get("points", "256"), int))
        ext = _positive("grid", "extent", _number("grid", "extent", g.get("extent", "16")))
        if n > 3:
            raise ConfigError(f"[grid] dimension: must be 1, 2 or 3, got {n}")
        grid = GridSpec(n, pts, ext)

    spec = GeneratorSpec()
    if cp.has_section("generator"):
        g = cp["generator"]
        kind = g.get("nonlinearity", "linear").strip()
        if kind not in NONLINEARITIES:
            raise ConfigError(f"[generator] nonlinearity: must be one of {NONLINEARITIES}, got {kind!r}")
        strength = _number("generator", "strength", g.get("strength", "0"))
        m = _positive("generator", "mass", _number("generator", "mass", g.get("mass", "1")))
        hb = _positive("generator", "hbar", _number("generator", "hbar", g.get("hbar", "1")))
        eps = _number("generator", "epsilon", g.get("epsilon", "1e-12"))
        if eps < 0:
            raise ConfigError(f"[generator] epsilon: must be non-negative, got {eps}")
        spec = GeneratorSpec(kind, strength, m, hb, eps)

    icfg = IntegratorConfig()
    if cp.has_section("integrator"):
        g = cp["integrator"]
        dt = _positive("integrator", "dt", _number("integrator", "dt", g.get("dt", "1e-3")))
        tol = _positive("integrator", "tolerance", _number("integrator", "tolerance", g.get("tolerance", "1e-6")))
        scheme = g.get("scheme", "split").strip()
        sub = g.get("substep", "rk4").strip()
        if scheme not in ("split", "rk4"):
            raise ConfigError(f"[integrator] scheme: must be 'split' or 'rk4', got {scheme!r}")
        if sub not in ("rk4", "midpoint"):
            raise ConfigError(f"[integrator] substep: must be 'rk4' or 'midpoint', got {sub!r}")
        icfg = IntegratorConfig(dt=dt, scheme=scheme, tolerance=tol, substep=sub)

    sweeps = {}
    if cp.has_section("sweep"):
        for k, v in cp["sweep"].items():
            sweeps[k] = _parse_list(k, v)

    tol = dict(DEFAULT_TOLERANCES)
    if cp.has_section("tolerances"):
        for k, v in cp["tolerances"].items():
            if k not in DEFAULT_TOLERANCES:
                raise ConfigError(f"[tolerances] {k}: unknown tolerance name")
            tol[k] = _positive("tolerances", k, _number("tolerances", k, v))

    known = {"run", "grid", "generator", "integrator", "sweep", "tolerances"}
    extra = {s: dict(cp[s]) for s in cp.sections() if s not in known}
    return RunConfig(exp, out, grid, spec, icfg, sweeps, tol, extra, seed, source)


def section_float(cfg: RunConfig, section: str, key: str, default: float, positive: bool = True) -> float:
    raw = cfg.section(section).get(key)
    if raw is None:
        return default
    v = _number(section, key, raw)
    return _positive(section, key, v) if positive else v


def section_int(cfg: RunConfig, section: str, key: str, default: int) -> int:
    raw = cfg.section(section).get(key)
    if raw is None:
        return default
    return _positive(section, key, _number(section, key, raw, int))


def section_grid(cfg: RunConfig, section: str, default: GridSpec) -> GridSpec:
    n = section_int(cfg, section, "dimension", default.n)
    pts = section_int(cfg, section, "points", default.points)
    ext = section_float(cfg, section, "extent", default.extent)
    return GridSpec(n, pts, ext)
