"""Standard states sampled on a grid: Gaussians, plane waves, the delta family, EPR pairs.

Width conventions:

* ``gaussian(grid, sigma)`` has ``|psi|^2`` with standard deviation ``sigma``
  per axis, i.e. ``psi ~ exp(-y^2 / (4 sigma^2))``.
* ``epr_state(..., sigma_c)`` has relative-coordinate amplitude
  ``exp(-u^2 / (2 sigma_c^2))``, so a position outcome on particle a leaves
  particle b in the normalized delta-family profile of sharpness
  ``r = 1 / (2 sigma_c^2)``.
"""

from __future__ import annotations

import math

import numpy as np

from .grid import ComplexField, GridSpec, TwoParticleField

__all__ = [
    "gaussian",
    "plane_wave",
    "delta_r",
    "delta_r_values",
    "epr_state",
    "sharpness_from_width",
]


def gaussian(grid: GridSpec, sigma: float = 1.0, center=0.0, momentum=0.0) -> ComplexField:
    """L2-normalized Gaussian wave packet (analytic normalization)."""
    r2 = grid.radius_squared(center)
    amp = (2.0 * math.pi * sigma**2) ** (-grid.n / 4.0) * np.exp(-r2 / (4.0 * sigma**2))
    k = np.broadcast_to(np.asarray(momentum, dtype=float), (grid.n,))
    phase = sum(k[a] * y for a, y in enumerate(grid.mesh()))
    return ComplexField(grid, amp * np.exp(1j * phase))


def plane_wave(grid: GridSpec, k, normalized: bool = False) -> ComplexField:
    """``exp(i k . y)``; ``k`` should be a multiple of ``2 pi / extent`` to be periodic."""
    k = np.broadcast_to(np.asarray(k, dtype=float), (grid.n,))
    amp = grid.extent ** (-grid.n / 2.0) if normalized else 1.0
    modes = k * grid.extent / (2.0 * math.pi)
    if np.allclose(modes, np.round(modes), rtol=0, atol=1e-9):
        # commensurate: reduce the phase with integer arithmetic so the samples
        # are an exact DFT mode up to one rounding per node
        m = np.round(modes).astype(np.int64)
        idx = np.indices(grid.shape)
        turns = sum(np.mod(m[a] * idx[a], grid.points) for a in range(grid.n))
        sign = (-1.0) ** int(np.sum(m))
        vals = sign * np.exp(2j * math.pi * np.mod(turns, grid.points) / grid.points)
        return ComplexField(grid, amp * vals)
    phase = sum(k[a] * y for a, y in enumerate(grid.mesh()))
    return ComplexField(grid, amp * np.exp(1j * phase))


def delta_r_values(grid: GridSpec, r: float, center=0.0) -> np.ndarray:
    return (r / math.pi) ** (grid.n / 2.0) * np.exp(-r * grid.radius_squared(center))


def delta_r(grid: GridSpec, r: float, center=0.0, normalized: bool = False) -> ComplexField:
    """Gaussian delta-approximant ``(r/pi)^(n/2) exp(-r |y - w|^2)``.

    By default it carries the delta normalization (unit integral).  With
    ``normalized=True`` it is rescaled to unit L2 norm instead.
    """
    vals = delta_r_values(grid, r, center)
    if normalized:
        vals = vals * (2.0 * r / math.pi) ** (grid.n / 4.0) / (r / math.pi) ** (grid.n / 2.0)
    return ComplexField(grid, vals)


def sharpness_from_width(sigma_c: float) -> float:
    """Effective sharpness ``r = 1 / (2 sigma_c^2)`` used by the concrete protocol."""
    return 1.0 / (2.0 * sigma_c**2)


def epr_state(grid: GridSpec, sigma_c: float, envelope: float | None = None) -> TwoParticleField:
    """Regularized EPR pair on ``grid x grid``.

    With ``envelope=None`` the state depends only on ``y_a - y_b`` (minimum
    image on the torus), so its total momentum is exactly zero on the grid.
    A finite ``envelope`` multiplies by ``exp(-R^2 / (2 envelope^2))`` in the
    centre-of-mass coordinate ``R = (y_a + y_b) / 2``; the relative
    coordinate is then left unwrapped, since the wrapped one would pair
    ``y_a ~ -L/2`` with ``y_b ~ L/2`` at ``R ~ 0``.  The box should be several
    envelope widths wide.
    """
    ya = grid.mesh()
    shape_a = grid.shape + (1,) * grid.n
    shape_b = (1,) * grid.n + grid.shape
    u2 = np.zeros(grid.shape + grid.shape)
    R2 = np.zeros_like(u2)
    for y in ya:
        a = y.reshape(shape_a)
        b = y.reshape(shape_b)
        d = a - b
        if envelope is None:
            d = np.mod(d + 0.5 * grid.extent, grid.extent) - 0.5 * grid.extent
        u2 = u2 + d * d
        if envelope is not None:
            R2 = R2 + (0.5 * (a + b)) ** 2
    amp = np.exp(-u2 / (2.0 * sigma_c**2))
    if envelope is not None:
        amp = amp * np.exp(-R2 / (2.0 * envelope**2))
    amp = amp.reshape(grid.size, grid.size)
    amp = amp / math.sqrt(float(np.sum(amp**2)) * grid.cell_volume**2)
    return TwoParticleField(grid, grid, amp)
