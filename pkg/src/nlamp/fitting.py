"""Least-squares helpers for affine laws in r and power-law remainders."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import FitConditioningError


@dataclass
class FitResult:
    """Affine fit ``y ~ slope * x + intercept`` plus a remainder exponent.

    ``x_range`` is the span of abscissae used (r for the asymptotic sweeps,
    t for finite-difference checks).  ``residual_exponent`` is the log-log
    slope of the remainder, NaN when no remainder was fitted or it vanishes.
    """

    slope: float
    intercept: float
    residual_exponent: float
    x_range: tuple[float, float]
    max_rel_residual: float
    expected_slope: Optional[float] = None
    expected_intercept: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def decades(self) -> float:
        lo, hi = self.x_range
        return math.log10(hi / lo) if lo > 0 else float("nan")


def require_decades(x: Sequence[float], decades: float = 2.0, min_points: int = 2) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.size < min_points:
        raise FitConditioningError(f"need at least {min_points} points, got {x.size}")
    if np.any(x <= 0):
        raise FitConditioningError("abscissae must be positive")
    span = math.log10(x.max() / x.min())
    if span < decades - 1e-9:
        raise FitConditioningError(f"abscissae span {span:.2f} decades, need {decades}")
    return x


def linear_lstsq(columns: Sequence[np.ndarray], y: np.ndarray, relative: bool = False) -> np.ndarray:
    """Coefficients of ``y ~ sum c_j columns[j]``; ``relative`` weights rows by 1/|y|."""
    A = np.column_stack(columns)
    y = np.asarray(y, dtype=float)
    if relative:
        w = 1.0 / np.maximum(np.abs(y), 1e-300)
        A = A * w[:, None]
        y = y * w
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef


def loglog_slope(x: np.ndarray, y: np.ndarray, floor: float = 0.0) -> float:
    """Least-squares slope of ``log|y|`` against ``log x``; NaN if |y| <= floor everywhere."""
    x = np.asarray(x, dtype=float)
    a = np.abs(np.asarray(y, dtype=float))
    mask = a > floor
    if np.count_nonzero(mask) < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[mask]), np.log(a[mask]), 1)[0])


def within(value: float, expected: float, rel: float, abs_floor: Optional[float] = None) -> bool:
    """Relative test; falls back to ``|value| <= abs_floor`` (default ``rel``) when expected is 0."""
    if expected == 0:
        return abs(value) <= (rel if abs_floor is None else abs_floor)
    return abs(value - expected) <= rel * abs(expected)
