"""Gaussian delta-family calculus: moments, pairings of N(delta_r) with test functions, fits in r.

The delta family is ``delta_r(y) = (r/pi)^(n/2) exp(-r |y|^2)``.  Closed
forms used here (all verified against quadrature in the tests):

* ``N(delta_r) = 4 r^2 |y|^2 delta_r``
* ``(lap + N) delta_r = (8 r^2 |y|^2 - 2 n r) delta_r``
* ``M(delta_r) = (n/2 ln(r/pi) - r |y|^2) delta_r``, ``K(delta_r) = 0``

Pairings ``int g(y) f(y) d^n y`` are computed after the substitution
``y = x / sqrt(r)``, which makes the Gaussian weight r-independent.  In one
dimension QUADPACK (adaptive Gauss-Kronrod) does the work; in two and three
dimensions the radial integral is adaptive and the angular one uses a fixed
product rule that is spectrally accurate for smooth integrands.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import QuadratureError
from .fitting import FitResult, linear_lstsq, loglog_slope, require_decades, within
from .generators import GeneratorSpec, apply_N, apply_nonlinear
from .grid import ComplexField, GridSpec
from .states import delta_r

__all__ = [
    "TestFunction",
    "TEST_FUNCTIONS",
    "surface_measure",
    "moment_exact",
    "moment_quadrature",
    "net_r_exponent",
    "pair_N_gaussian",
    "pair_delta",
    "pair_N_grid",
    "verify_N_expansion",
    "verify_delta_weak_limit",
    "GaussianImages",
    "bbm_kostin_on_gaussian",
    "bbm_pairing_growth",
]

# Substituted-variable integration box: exp(-X_MAX^2) is far below double precision.
X_MAX = 12.0
_EPSREL = 1e-11
_ANGULAR_NODES = 128
_POLAR_NODES = 48


@dataclass(frozen=True)
class TestFunction:
    """Smooth test function with its value and Hessian trace at the origin.

    ``f`` takes an array of shape ``(..., n)`` and returns shape ``(...)``.
    ``value0`` and ``hessian_trace0`` take ``n``.
    """

    __test__ = False  # not a pytest class

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    value0: Callable[[int], float]
    hessian_trace0: Callable[[int], float]
    odd: bool = False


def _sq(y):
    return np.sum(y * y, axis=-1)


_SHIFT = 0.3


def _shift_vec(n):
    return np.full(n, _SHIFT / math.sqrt(n))


TEST_FUNCTIONS = {
    "gauss": TestFunction(
        "gauss",
        lambda y: np.exp(-_sq(y)),
        lambda n: 1.0,
        lambda n: -2.0 * n,
    ),
    "shifted_gauss": TestFunction(
        "shifted_gauss",
        lambda y: np.exp(-_sq(y - _shift_vec(y.shape[-1]))),
        lambda n: math.exp(-_SHIFT**2),
        lambda n: (4.0 * _SHIFT**2 - 2.0 * n) * math.exp(-_SHIFT**2),
    ),
    "cos_gauss": TestFunction(
        "cos_gauss",
        lambda y: np.cos(y[..., 0]) * np.exp(-_sq(y)),
        lambda n: 1.0,
        lambda n: -1.0 - 2.0 * n,
    ),
    "r2_gauss": TestFunction(
        "r2_gauss",
        lambda y: _sq(y) * np.exp(-_sq(y)),
        lambda n: 0.0,
        lambda n: 2.0 * n,
    ),
    "odd_gauss": TestFunction(
        "odd_gauss",
        lambda y: y[..., 0] * np.exp(-_sq(y)),
        lambda n: 0.0,
        lambda n: 0.0,
        odd=True,
    ),
}


def surface_measure(n: int) -> float:
    """Surface area of the unit sphere in R^n, ``2 pi^(n/2) / Gamma(n/2)``."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def moment_exact(n: int, p: int, r: float) -> float:
    """``int |y|^p exp(-r |y|^2) d^n y = (sigma_n / 2) Gamma((n+p)/2) r^(-(n+p)/2)``."""
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    if p < 0 or p % 2:
        raise ValueError(f"p must be a non-negative even integer, got {p}")
    a = 0.5 * (n + p)
    if a > 170:
        raise OverflowError(f"Gamma({a}) overflows double precision")
    return 0.5 * surface_measure(n) * math.gamma(a) * r ** (-a)


def moment_quadrature(n: int, p: int, r: float) -> float:
    """Same moment by adaptive radial quadrature."""
    s = 1.0 / math.sqrt(r)
    val, err = integrate.quad(
        lambda x: x ** (n - 1 + p) * math.exp(-x * x), 0.0, X_MAX + math.sqrt(n + p),
        epsabs=0.0, epsrel=_EPSREL, limit=200,
    )
    if err > 1e-9 * abs(val):
        raise QuadratureError(f"radial moment quadrature error {err:.2e}")
    return surface_measure(n) * val * s ** (n + p)


def net_r_exponent(n: int, p: int) -> float:
    """Power of r left after the ``r^(2 + n/2)`` prefactor meets a p-th moment."""
    return 2.0 + n / 2.0 - (n + p) / 2.0


# -- integration over R^n of x-substituted integrands --------------------------


def _angular_rule(n: int):
    """Unit directions and weights summing to the sphere's surface measure."""
    if n == 2:
        th = 2.0 * math.pi * np.arange(_ANGULAR_NODES) / _ANGULAR_NODES
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        w = np.full(_ANGULAR_NODES, 2.0 * math.pi / _ANGULAR_NODES)
        return dirs, w
    mu, wmu = np.polynomial.legendre.leggauss(_POLAR_NODES)
    ph = 2.0 * math.pi * np.arange(_ANGULAR_NODES) / _ANGULAR_NODES
    MU, PH = np.meshgrid(mu, ph, indexing="ij")
    st = np.sqrt(1.0 - MU**2)
    dirs = np.stack([st * np.cos(PH), st * np.sin(PH), MU], axis=-1).reshape(-1, 3)
    w = (wmu[:, None] * np.full(_ANGULAR_NODES, 2.0 * math.pi / _ANGULAR_NODES)).ravel()
    return dirs, w


def integrate_rn(g: Callable[[np.ndarray], np.ndarray], n: int, radial_weight=None) -> float:
    """``int_{R^n} g(x) d^n x`` for g concentrated in ``|x| < X_MAX``.

    ``g`` is vectorized over arrays of shape ``(..., n)``.
    """
    with warnings.catch_warnings():
        # convergence is judged from the returned error estimate below
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = _integrate_rn(g, n)
    if err > max(1e-8 * abs(val), 1e-13):
        raise QuadratureError(f"quadrature did not converge (estimate {val:.6e} +- {err:.1e})")
    return val


def _integrate_rn(g, n):
    if n == 1:
        return integrate.quad(
            lambda x: float(g(np.array([x]))), -X_MAX, X_MAX,
            epsabs=0.0, epsrel=_EPSREL, limit=400, points=[0.0],
        )
    else:
        dirs, w = _angular_rule(n)

        def shell(rho):
            return rho ** (n - 1) * float(np.dot(w, g(rho * dirs)))

        return integrate.quad(shell, 0.0, X_MAX, epsabs=0.0, epsrel=_EPSREL, limit=400)


def _scaled(tf: TestFunction | Callable, r: float):
    f = tf.f if isinstance(tf, TestFunction) else tf
    s = 1.0 / math.sqrt(r)
    return lambda x: f(x * s)


def pair_N_gaussian(f, r: float, n: int) -> float:
    """``int N(delta_r)(y) f(y) d^n y`` via the closed form ``4 r^2 |y|^2 delta_r``.

    After ``y = x / sqrt(r)`` this is ``4 r pi^(-n/2) int |x|^2 e^{-|x|^2} f(x / sqrt r) d^n x``.
    """
    if r <= 0:
        raise ValueError(f"r must be positive, got {r}")
    fs = _scaled(f, r)
    val = integrate_rn(lambda x: _sq(x) * np.exp(-_sq(x)) * fs(x), n)
    return 4.0 * r * math.pi ** (-n / 2.0) * val


def pair_delta(f, r: float, n: int) -> float:
    """``int delta_r(y) f(y) d^n y``."""
    fs = _scaled(f, r)
    return math.pi ** (-n / 2.0) * integrate_rn(lambda x: np.exp(-_sq(x)) * fs(x), n)


def pair_M_gaussian(f, r: float, n: int) -> float:
    """``int M(delta_r) f`` with unit coupling, via the closed form of M(delta_r)."""
    fs = _scaled(f, r)
    c = 0.5 * n * math.log(r / math.pi)
    val = integrate_rn(lambda x: (c - _sq(x)) * np.exp(-_sq(x)) * fs(x), n)
    return math.pi ** (-n / 2.0) * val


def pair_N_grid(f, r: float, grid: GridSpec, eps: float = 1e-30) -> float:
    """Same pairing as :func:`pair_N_gaussian`, but with N applied spectrally on a grid.

    The grid must resolve the width ``1/sqrt(r)``.  The tiny default
    ``eps`` only matters where ``delta_r^2`` underflows at the box edge.
    """
    if grid.spacing * math.sqrt(r) > 0.5:
        raise QuadratureError(
            f"grid spacing {grid.spacing:.3g} does not resolve width 1/sqrt({r:g})"
        )
    d = delta_r(grid, r)
    Nd = apply_N(d, eps).values
    y = np.stack(grid.mesh(), axis=-1)
    fv = f.f(y) if isinstance(f, TestFunction) else f(y)
    return float(np.sum(Nd.real * fv) * grid.cell_volume)


# -- fits in r ---------------------------------------------------------------


def verify_N_expansion(
    tf: TestFunction,
    r_list: Sequence[float],
    n: int,
    slope_tol: float = 0.005,
    intercept_tol: float = 0.02,
    exponent_tol: float = 0.15,
) -> FitResult:
    """Fit ``pair_N_gaussian(f, r) = a r + b + c / r + d / r^2`` and test the weak expansion.

    Expected: ``a = 2 n f(0)``, ``b = (n/2 + 1) Tr Hf(0)``, remainder
    ``pairing - a r - b`` decaying like ``r^-1``.  The explicit remainder
    columns keep the O(1/r) terms from biasing ``a`` and ``b``; a slope
    error of even 1e-4 would otherwise swamp the remainder at r ~ 1e3.
    """
    r = require_decades(r_list, 2.0, min_points=8)
    vals = np.array([pair_N_gaussian(tf, float(ri), n) for ri in r])
    # pairing / r = a + b u + c u^2 + d u^3 with u = 1/r: well conditioned on u in (0, 0.1]
    u = 1.0 / r
    a, b, c, d = linear_lstsq([np.ones_like(u), u, u**2, u**3], vals / r)
    resid = vals - (a * r + b)
    expo = loglog_slope(r, resid, floor=1e-12 * np.max(np.abs(vals)))
    model = a * r + b + c * u + d * u**2
    a_exp = 2.0 * n * tf.value0(n)
    b_exp = (n / 2.0 + 1.0) * tf.hessian_trace0(n)
    ok = (
        within(a, a_exp, slope_tol, abs_floor=slope_tol * 2.0 * n)
        and within(b, b_exp, intercept_tol)
        and abs(expo - (-1.0)) <= exponent_tol
    )
    return FitResult(
        slope=float(a),
        intercept=float(b),
        residual_exponent=float(expo),
        x_range=(float(r.min()), float(r.max())),
        max_rel_residual=float(np.max(np.abs(vals - model) / np.maximum(np.abs(vals), 1e-300))),
        expected_slope=a_exp,
        expected_intercept=b_exp,
        extra={"ok": ok, "c": float(c), "d": float(d), "r": r.tolist(), "pairing": vals.tolist(),
               "function": tf.name, "n": n},
    )


def verify_delta_weak_limit(
    tf: TestFunction, r_list: Sequence[float], n: int, exponent_tol: float = 0.15
) -> FitResult:
    """Residual ``int delta_r f - f(0)`` and its decay exponent in r (expected -1)."""
    r = require_decades(r_list, 2.0)
    vals = np.array([pair_delta(tf, float(ri), n) for ri in r])
    f0 = tf.value0(n)
    resid = vals - f0
    expo = loglog_slope(r, resid, floor=1e-13)
    ok = bool(np.isnan(expo) or abs(expo + 1.0) <= exponent_tol)
    return FitResult(
        slope=0.0,
        intercept=f0,
        residual_exponent=expo,
        x_range=(float(r.min()), float(r.max())),
        max_rel_residual=float(np.max(np.abs(resid))),
        expected_intercept=f0,
        extra={"ok": ok, "residual": resid.tolist(), "r": r.tolist()},
    )


@dataclass(frozen=True)
class GaussianImages:
    """Closed-form images of ``delta_r`` under M and K, and their checks."""

    m_image: ComplexField
    k_image: ComplexField
    m_mismatch: float  # max |closed form - generator BBM path|
    k_max: float  # max |K(delta_r)| from the generator's Kostin path
    m_imag_max: float  # the M image must be real


def bbm_kostin_on_gaussian(r: float, grid: GridSpec, p: float = 1.0, q: float = 1.0) -> GaussianImages:
    """Sample ``M(delta_r)`` and ``K(delta_r)`` in closed form and compare with the generators.

    The generator paths run with ``epsilon = 0`` (the logarithm of the exact
    sampled modulus), so agreement is limited only by rounding.
    """
    n = grid.n
    d = delta_r(grid, r)
    y2 = grid.radius_squared()
    m_closed = p * (0.5 * n * math.log(r / math.pi) - r * y2) * d.values
    m_gen = apply_nonlinear(d, GeneratorSpec.bbm(p, epsilon=0.0)).values
    k_gen = apply_nonlinear(d, GeneratorSpec.kostin(q, epsilon=0.0)).values
    return GaussianImages(
        m_image=ComplexField(grid, m_closed),
        k_image=ComplexField(grid, np.zeros(grid.shape)),
        m_mismatch=float(np.max(np.abs(m_closed - m_gen))),
        k_max=float(np.max(np.abs(k_gen))),
        m_imag_max=float(np.max(np.abs(np.imag(m_closed)))),
    )


def bbm_pairing_growth(tf: TestFunction, r_list: Sequence[float], n: int, tol: float = 0.02) -> FitResult:
    """Fit ``int M(delta_r) f`` against ``ln r``; the slope should be ``(n/2) f(0)``.

    A ``1/r`` column absorbs the subleading decay so that the log-slope is
    read off cleanly.
    """
    r = require_decades(r_list, 3.0, min_points=4)
    vals = np.array([pair_M_gaussian(tf, float(ri), n) for ri in r])
    lr = np.log(r)
    a, b, c = linear_lstsq([lr, np.ones_like(r), 1.0 / r], vals)
    expected = 0.5 * n * tf.value0(n)
    model = a * lr + b + c / r
    return FitResult(
        slope=float(a),
        intercept=float(b),
        residual_exponent=float("nan"),
        x_range=(float(r.min()), float(r.max())),
        max_rel_residual=float(np.max(np.abs(vals - model) / np.maximum(np.abs(vals), 1e-300))),
        expected_slope=expected,
        extra={"ok": within(a, expected, tol), "pairing": vals.tolist(), "r": r.tolist()},
    )
