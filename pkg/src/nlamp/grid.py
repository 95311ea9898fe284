"""Periodic uniform grids, complex fields on them, and spectral calculus.

Everything here is immutable: field values are stored as read-only numpy
arrays and every operation returns a new object.  Derivatives are taken by
multiplying with ``i k`` in the discrete Fourier basis, with the wavenumbers
from :func:`numpy.fft.fftfreq` used consistently for first and second
derivatives, so that ``gradient . gradient == laplacian`` holds exactly and
discrete integration by parts is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "GridSpec",
    "ComplexField",
    "TwoParticleField",
    "inner_product",
    "norm",
    "gradient",
    "laplacian",
    "schmidt_spectrum",
    "boundary_level",
    "write_field_csv",
    "read_field_csv",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid of ``points**n`` nodes on ``[-extent/2, extent/2)^n``."""

    n: int
    points: int
    extent: float

    def __post_init__(self):
        if int(self.n) != self.n or not 1 <= self.n <= 3:
            raise ValueError(f"dimension n must be 1, 2 or 3, got {self.n!r}")
        if int(self.points) != self.points or self.points < 2:
            raise ValueError(f"points must be an integer >= 2, got {self.points!r}")
        if not (self.extent > 0 and math.isfinite(self.extent)):
            raise ValueError(f"extent must be positive, got {self.extent!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def spacing(self) -> float:
        return self.extent / self.points

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.n

    @property
    def size(self) -> int:
        return self.points**self.n

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates along one axis (identical on every axis)."""
        return -0.5 * self.extent + self.spacing * np.arange(self.points)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.coords] * self.n), indexing="ij"))

    def radius_squared(self, center=None) -> np.ndarray:
        """Squared minimum-image distance of every node from ``center``."""
        center = np.zeros(self.n) if center is None else np.broadcast_to(center, (self.n,))
        total = np.zeros(self.shape)
        for axis, y in enumerate(self.mesh()):
            d = np.mod(y - center[axis] + 0.5 * self.extent, self.extent) - 0.5 * self.extent
            total = total + d * d
        return total

    def k_squared(self) -> np.ndarray:
        ks = np.meshgrid(*([self.wavenumbers] * self.n), indexing="ij")
        return sum(k * k for k in ks)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex amplitudes sampled on a :class:`GridSpec` (natural units)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.size != self.grid.size:
            raise GridMismatchError(
                f"{arr.size} values for a grid of {self.grid.size} points"
            )
        arr = _frozen(arr.reshape(self.grid.shape))
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", arr)

    def with_values(self, values) -> "ComplexField":
        return ComplexField(self.grid, values)

    def scaled(self, c: complex) -> "ComplexField":
        return ComplexField(self.grid, c * self.values)

    def norm(self) -> float:
        return norm(self)

    def normalized(self) -> "ComplexField":
        return self.scaled(1.0 / self.norm())

    def __add__(self, other: "ComplexField") -> "ComplexField":
        _same_grid(self, other)
        return ComplexField(self.grid, self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        _same_grid(self, other)
        return ComplexField(self.grid, self.values - other.values)


@dataclass(frozen=True, eq=False)
class TwoParticleField:
    """Amplitudes ``values[i, j]`` at node ``i`` of grid_a and node ``j`` of grid_b."""

    grid_a: GridSpec
    grid_b: GridSpec
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values)
        shape = (self.grid_a.size, self.grid_b.size)
        if arr.size != shape[0] * shape[1]:
            raise GridMismatchError(f"expected {shape} amplitudes, got {arr.shape}")
        arr = _frozen(arr.reshape(shape))
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", arr)

    @property
    def cell_volume(self) -> float:
        return self.grid_a.cell_volume * self.grid_b.cell_volume

    def tensor_values(self) -> np.ndarray:
        """Values reshaped to ``grid_a.shape + grid_b.shape``."""
        return self.values.reshape(self.grid_a.shape + self.grid_b.shape)

    def norm(self) -> float:
        return math.sqrt(float(np.sum(np.abs(self.values) ** 2)) * self.cell_volume)

    @classmethod
    def product(cls, a: ComplexField, b: ComplexField) -> "TwoParticleField":
        return cls(a.grid, b.grid, np.outer(a.values.ravel(), b.values.ravel()))


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def inner_product(a: ComplexField, b: ComplexField) -> complex:
    """Riemann-sum approximation of the L2 product, conjugate-linear in ``a``."""
    _same_grid(a, b)
    return complex(np.vdot(a.values, b.values) * a.grid.cell_volume)


def norm(f: ComplexField) -> float:
    return math.sqrt(float(np.sum(np.abs(f.values) ** 2)) * f.grid.cell_volume)


# Array-level spectral operators.  ``axes`` names the array axes that carry
# the grid; any other axes are batch axes (mixture members, the other
# particle of a two-particle field, ...).


def spectral_gradient(arr: np.ndarray, grid: GridSpec, axes: Sequence[int]) -> list[np.ndarray]:
    axes = tuple(axes)
    ft = np.fft.fftn(arr, axes=axes)
    out = []
    for ax in axes:
        shape = [1] * arr.ndim
        shape[ax] = grid.points
        ik = 1j * grid.wavenumbers.reshape(shape)
        out.append(np.fft.ifftn(ik * ft, axes=axes))
    return out


def spectral_laplacian(arr: np.ndarray, grid: GridSpec, axes: Sequence[int]) -> np.ndarray:
    axes = tuple(axes)
    ft = np.fft.fftn(arr, axes=axes)
    ksq = np.zeros([1] * arr.ndim)
    for ax in axes:
        shape = [1] * arr.ndim
        shape[ax] = grid.points
        ksq = ksq + grid.wavenumbers.reshape(shape) ** 2
    return np.fft.ifftn(-ksq * ft, axes=axes)


def gradient(f: ComplexField) -> tuple[ComplexField, ...]:
    """Spectral gradient; one component per axis."""
    comps = spectral_gradient(f.values, f.grid, range(f.grid.n))
    return tuple(ComplexField(f.grid, c) for c in comps)


def laplacian(f: ComplexField) -> ComplexField:
    return ComplexField(f.grid, spectral_laplacian(f.values, f.grid, range(f.grid.n)))


def schmidt_spectrum(psi: TwoParticleField) -> np.ndarray:
    """Singular values (descending) scaled so their squares sum to the squared norm."""
    return np.linalg.svd(psi.values * math.sqrt(psi.cell_volume), compute_uv=False)


def boundary_level(f: ComplexField) -> float:
    """Largest |psi| on the outer faces of the box, relative to max |psi|.

    Fields are expected to decay below ~1e-10 here unless they are exactly
    periodic; callers decide whether to warn.
    """
    a = np.abs(f.values)
    peak = a.max()
    if peak == 0:
        return 0.0
    edge = 0.0
    for ax in range(f.grid.n):
        edge = max(edge, np.take(a, 0, axis=ax).max(), np.take(a, -1, axis=ax).max())
    return float(edge / peak)


def write_field_csv(f: ComplexField, path) -> None:
    """Write ``f`` as a key=value header block followed by ``i0,..,re,im`` rows."""
    path = Path(path)
    idx = np.indices(f.grid.shape).reshape(f.grid.n, -1).T
    vals = f.values.ravel()
    lines = [
        f"# n={f.grid.n}",
        f"# points={f.grid.points}",
        f"# extent={f.grid.extent!r}",
        ",".join([f"i{a}" for a in range(f.grid.n)] + ["re", "im"]),
    ]
    for ij, v in zip(idx, vals):
        lines.append(
            ",".join([str(int(i)) for i in ij] + [f"{v.real:.16e}", f"{v.imag:.16e}"])
        )
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_field_csv(path) -> ComplexField:
    header = {}
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key.strip()] = value.strip()
        elif line and not line[0].isalpha():
            rows.append(line.split(","))
    grid = GridSpec(int(header["n"]), int(header["points"]), float(header["extent"]))
    values = np.zeros(grid.shape, dtype=complex)
    for row in rows:
        idx = tuple(int(x) for x in row[: grid.n])
        values[idx] = float(row[grid.n]) + 1j * float(row[grid.n + 1])
    return ComplexField(grid, values)
