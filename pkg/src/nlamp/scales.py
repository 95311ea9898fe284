"""Order-of-magnitude arithmetic linking nonlinearity suppression, localization and wavelength.

Quantities carry a dimension vector over (length, time, mass) and a CGS
unit label.  Every operation checks dimensions on entry and raises
:class:`~nlamp.errors.UnitError` on a mismatch.  Plain floats are accepted
and taken to be in the expected units.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import UnitError

__all__ = [
    "Quantity",
    "length",
    "sharpness",
    "diffusion",
    "mass",
    "action",
    "dimensionless",
    "PhysicalConstants",
    "ScaleQuery",
    "nu_ratio",
    "amplification_ratio",
    "fundamental_length",
    "nu_for_wavelength",
    "linear_rate",
    "same_order",
    "scales_table",
    "table_csv",
    "format_table",
]

_BASE_UNITS = ("cm", "s", "g")


def _unit_label(dims) -> str:
    parts = []
    for u, p in zip(_BASE_UNITS, dims):
        if p == 1:
            parts.append(u)
        elif p != 0:
            parts.append(f"{u}^{p}")
    return " ".join(parts) if parts else "1"


@dataclass(frozen=True)
class Quantity:
    """Value in CGS units with integer exponents of (cm, s, g)."""

    value: float
    dims: tuple[int, int, int] = (0, 0, 0)

    @property
    def units(self) -> str:
        return _unit_label(self.dims)

    def __mul__(self, other):
        o = _as_quantity(other)
        return Quantity(self.value * o.value, tuple(a + b for a, b in zip(self.dims, o.dims)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _as_quantity(other)
        return Quantity(self.value / o.value, tuple(a - b for a, b in zip(self.dims, o.dims)))

    def __pow__(self, p: int):
        return Quantity(self.value**p, tuple(a * p for a in self.dims))

    def require(self, dims, what: str) -> float:
        if tuple(self.dims) != tuple(dims):
            raise UnitError(f"{what} must have units {_unit_label(dims)}, got {self.units}")
        return self.value

    def __float__(self):
        return float(self.require((0, 0, 0), "quantity"))


def _as_quantity(x) -> Quantity:
    return x if isinstance(x, Quantity) else Quantity(float(x))


LENGTH = (1, 0, 0)
SHARPNESS = (-2, 0, 0)
DIFFUSION = (2, -1, 0)
MASS = (0, 0, 1)
ACTION = (2, -1, 1)
RATE = (0, -1, 0)
NONE = (0, 0, 0)


def length(v: float) -> Quantity:
    return Quantity(v, LENGTH)


def sharpness(v: float) -> Quantity:
    return Quantity(v, SHARPNESS)


def diffusion(v: float) -> Quantity:
    return Quantity(v, DIFFUSION)


def mass(v: float) -> Quantity:
    return Quantity(v, MASS)


def action(v: float) -> Quantity:
    return Quantity(v, ACTION)


def dimensionless(v: float) -> Quantity:
    return Quantity(v, NONE)


def _value(x, dims, what) -> float:
    if isinstance(x, Quantity):
        return x.require(dims, what)
    return float(x)


def _positive(v: float, what: str, allow_zero: bool = False) -> float:
    if not math.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
        raise ValueError(f"{what} must be {'non-negative' if allow_zero else 'positive'}, got {v}")
    return v


@dataclass(frozen=True)
class PhysicalConstants:
    """CGS constants.  ``mass`` defaults to the proton mass.

    ``vacuum_energy_ratio`` is the commonly quoted ratio of the observed
    dark-energy density to the field-theory vacuum estimate; it is only
    printed next to the suppression ratio, never used in arithmetic.
    """

    planck_length: float = 1.6e-33
    hubble_radius: float = 1e30
    hbar: float = 1.054571817e-27
    mass: float = 1.67262192e-24
    vacuum_energy_ratio: float = 1e-123
    units: dict = field(
        default_factory=lambda: {
            "planck_length": "cm",
            "hubble_radius": "cm",
            "hbar": "erg s",
            "mass": "g",
            "vacuum_energy_ratio": "1",
        }
    )

    def __post_init__(self):
        for k in ("planck_length", "hubble_radius", "hbar", "mass", "vacuum_energy_ratio"):
            _positive(getattr(self, k), k)


def nu_ratio(D, m, hbar) -> float:
    """``2 m D / hbar``: nonlinear over linear coefficient of the DG generator."""
    d = _positive(_value(D, DIFFUSION, "D"), "D", allow_zero=True)
    mm = _positive(_value(m, MASS, "m"), "m")
    hb = _positive(_value(hbar, ACTION, "hbar"), "hbar")
    return 2.0 * mm * d / hb


def amplification_ratio(nu, r, L) -> float:
    """``nu r L^2``: amplified nonlinear rate over the kinetic rate at wavelength L."""
    n = _positive(_value(nu, NONE, "nu"), "nu", allow_zero=True)
    rr = r if isinstance(r, Quantity) else sharpness(float(r))
    ll = L if isinstance(L, Quantity) else length(float(L))
    rr.require(SHARPNESS, "r")
    ll.require(LENGTH, "L")
    x = rr * ll**2
    return n * _positive(x.require(NONE, "r L^2"), "r L^2")


def fundamental_length(nu, L_p=1.6e-33) -> float:
    """``L_p / sqrt(nu)``."""
    n = _positive(_value(nu, NONE, "nu"), "nu")
    lp = _positive(_value(L_p, LENGTH, "L_p"), "L_p")
    return lp / math.sqrt(n)


def nu_for_wavelength(L, L_p=1.6e-33) -> float:
    """The nu with ``nu (1/L_p^2) L^2 = 1``, i.e. ``(L_p / L)^2``."""
    ll = _positive(_value(L, LENGTH, "L"), "L")
    lp = _positive(_value(L_p, LENGTH, "L_p"), "L_p")
    return (lp / ll) ** 2


def linear_rate(hbar, m, L, b_expectation: float = 1.0, constant: float = 1.0) -> float:
    """Kinetic-term rate ``constant * hbar / (m L^2) * <B>`` (1/s).

    The estimate is dimensional only; ``constant`` is the unknown order-one
    prefactor.
    """
    hb = Quantity(_value(hbar, ACTION, "hbar"), ACTION)
    mm = Quantity(_value(m, MASS, "m"), MASS)
    ll = Quantity(_value(L, LENGTH, "L"), LENGTH)
    _positive(mm.value, "m")
    _positive(ll.value, "L")
    return constant * (hb / (mm * ll**2)).require(RATE, "hbar/(m L^2)") * b_expectation


def same_order(value: float, reference: float, window: tuple[float, float] = (0.1, 10.0)) -> bool:
    """Order-of-magnitude agreement: ``value / reference`` inside ``window``."""
    if reference == 0:
        return value == 0
    q = value / reference
    return window[0] <= q <= window[1]


@dataclass(frozen=True)
class ScaleQuery:
    """Partial specification of (nu, r, L, D); ``complete`` fills in the rest.

    Missing ``nu`` comes from ``D`` (or ``D`` from ``nu``), missing ``r``
    defaults to Planck localization ``1/L_p^2``, missing ``L`` to the
    fundamental length at which the amplification ratio is one.
    """

    nu: Optional[float] = None
    r: Optional[float] = None
    L: Optional[float] = None
    D: Optional[float] = None

    def __post_init__(self):
        for k in ("nu", "r", "L", "D"):
            v = getattr(self, k)
            if v is not None:
                _positive(float(v), k, allow_zero=(k in ("nu", "D")))

    def complete(self, c: PhysicalConstants = PhysicalConstants()) -> "ScaleQuery":
        q = self
        if q.nu is None and q.D is None:
            raise ValueError("need nu or D")
        if q.nu is None:
            q = replace(q, nu=nu_ratio(q.D, c.mass, c.hbar))
        elif q.D is None:
            q = replace(q, D=q.nu * c.hbar / (2.0 * c.mass))
        if q.r is None:
            q = replace(q, r=1.0 / c.planck_length**2)
        if q.L is None:
            q = replace(q, L=1.0 / math.sqrt(q.nu * q.r))
        return q

    def ratio(self, c: PhysicalConstants = PhysicalConstants()) -> float:
        q = self.complete(c)
        return amplification_ratio(q.nu, q.r, q.L)


def scales_table(
    c: PhysicalConstants = PhysicalConstants(),
    nu: float = 1e-20,
    L: Optional[float] = None,
    r: Optional[float] = None,
) -> list[tuple[str, float, str, str]]:
    """Rows ``(quantity, value, units, reference)``; reference is the rough expected figure."""
    lp = c.planck_length
    rr = 1.0 / lp**2 if r is None else r
    fl = fundamental_length(nu, lp)
    LL = fl if L is None else L
    nu_h = nu_for_wavelength(c.hubble_radius, lp)
    rows = [
        ("planck_length", lp, "cm", ""),
        ("hubble_radius", c.hubble_radius, "cm", ""),
        ("nu", nu, "1", "experimental bound ~1e-20"),
        ("sharpness_r", rr, "cm^-2", "1/L_p^2"),
        ("fundamental_length", fl, "cm", "~1e-23 cm at nu=1e-20"),
        ("fundamental_length_over_planck", fl / lp, "1", "1e10 at nu=1e-20"),
        ("wavelength_L", LL, "cm", ""),
        ("amplification_ratio", amplification_ratio(nu, rr, LL), "1", "1 at the fundamental length"),
        ("nu_for_hubble_wavelength", nu_h, "1", "~1e-126"),
        ("amplification_ratio_hubble", amplification_ratio(1e-126, 1.0 / lp**2, c.hubble_radius), "1", "order 1"),
        ("log10_nu_for_hubble_wavelength", math.log10(nu_h), "1", ""),
        ("log10_vacuum_energy_ratio", math.log10(c.vacuum_energy_ratio), "1", "printed for comparison"),
        ("nu_for_1e60_planck_scale", nu_for_wavelength(1e60 * lp, lp), "1", "1e-120"),
    ]
    return rows


def table_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "value", "units", "reference"])
    for name, v, u, ref in rows:
        w.writerow([name, f"{v:.16e}", u, ref])
    return buf.getvalue()


def format_table(rows) -> str:
    width = max(len(r[0]) for r in rows)
    lines = [f"{'quantity':<{width}}  {'value':>24}  {'units':<6}  reference"]
    for name, v, u, ref in rows:
        lines.append(f"{name:<{width}}  {v:>24.16e}  {u:<6}  {ref}")
    return "\n".join(lines)
