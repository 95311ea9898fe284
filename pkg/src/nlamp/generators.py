"""Evolution generators: kinetic term plus one selectable nonlinearity.

``F psi = -(hbar^2 / 2m) lap psi + (nonlinear part)`` with the nonlinear
part one of

* ``linear``  : nothing,
* ``dg``      : ``i D hbar (lap psi + N psi)``, ``N psi = |grad psi|^2 / |psi|^2 psi``,
* ``bbm``     : ``p ln|psi| psi``,
* ``kostin``  : ``i q ln(psi / conj psi) psi = -2 q arg(psi) psi``.

The R term of the Doebner-Goldin family is fixed to zero.  ``epsilon`` is
an additive regularization of ``|psi|^2`` wherever it is divided by or
logged; ``epsilon = 0`` gives the unregularized operators and raises
:class:`~nlamp.errors.SingularPointError` at genuine singularities.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import SingularPointError
from .grid import ComplexField, GridSpec, inner_product, spectral_gradient, spectral_laplacian

NONLINEARITIES = ("linear", "dg", "bbm", "kostin")

# |psi|^2 below this counts as zero when epsilon == 0
_TINY = 1e-300


@dataclass(frozen=True)
class GeneratorSpec:
    """Selection and constants of the one-particle generator.

    ``strength`` is D for ``dg``, p for ``bbm`` and q for ``kostin``; it is
    ignored for ``linear``.
    """

    nonlinearity: str = "linear"
    strength: float = 0.0
    mass: float = 1.0
    hbar: float = 1.0
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.nonlinearity not in NONLINEARITIES:
            raise ValueError(
                f"nonlinearity must be one of {NONLINEARITIES}, got {self.nonlinearity!r}"
            )
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        if not self.hbar > 0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        if not self.epsilon >= 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")

    @classmethod
    def linear(cls, **kw) -> "GeneratorSpec":
        return cls("linear", 0.0, **kw)

    @classmethod
    def dg(cls, D: float, **kw) -> "GeneratorSpec":
        return cls("dg", D, **kw)

    @classmethod
    def bbm(cls, p: float, **kw) -> "GeneratorSpec":
        return cls("bbm", p, **kw)

    @classmethod
    def kostin(cls, q: float, **kw) -> "GeneratorSpec":
        return cls("kostin", q, **kw)

    @property
    def D(self) -> float:
        return self.strength if self.nonlinearity == "dg" else 0.0

    @property
    def is_linear(self) -> bool:
        return self.nonlinearity == "linear" or self.strength == 0.0

    def with_epsilon(self, epsilon: float) -> "GeneratorSpec":
        return replace(self, epsilon=epsilon)


def _singular_check(dens, grad2):
    bad = (dens < _TINY) & (grad2 > 0)
    if np.any(bad):
        raise SingularPointError(np.unravel_index(int(np.argmax(bad)), bad.shape))


def n_array(arr: np.ndarray, grid: GridSpec, axes: Sequence[int], eps: float) -> np.ndarray:
    """``|grad psi|^2 psi / (|psi|^2 + eps)`` on a raw array."""
    grads = spectral_gradient(arr, grid, axes)
    grad2 = sum(np.abs(g) ** 2 for g in grads)
    dens = np.abs(arr) ** 2
    if eps == 0:
        _singular_check(dens, grad2)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(dens > 0, grad2 * arr / np.where(dens > 0, dens, 1.0), 0.0)
        return out
    return grad2 * arr / (dens + eps)


def kinetic_array(arr, grid, axes, spec: GeneratorSpec) -> np.ndarray:
    return -(spec.hbar**2 / (2.0 * spec.mass)) * spectral_laplacian(arr, grid, axes)


def log_modulus(arr: np.ndarray, eps: float) -> np.ndarray:
    """``ln|psi|`` as ``0.5 ln(|psi|^2 + eps)``; at ``eps == 0`` zeros map to 0 (psi ln|psi| -> 0)."""
    if eps > 0:
        return 0.5 * np.log(np.abs(arr) ** 2 + eps)
    a = np.abs(arr)
    with np.errstate(divide="ignore"):
        return np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), 0.0)


def nonlinear_array(arr, grid, axes, spec: GeneratorSpec) -> np.ndarray:
    """The non-kinetic part of ``F psi``."""
    kind = spec.nonlinearity
    if kind == "linear" or spec.strength == 0.0:
        return np.zeros_like(arr)
    if kind == "dg":
        inner = spectral_laplacian(arr, grid, axes) + n_array(arr, grid, axes, spec.epsilon)
        return 1j * spec.strength * spec.hbar * inner
    if kind == "bbm":
        return spec.strength * log_modulus(arr, spec.epsilon) * arr
    # kostin: ln(psi / conj psi) = 2 i arg(psi), principal value, no unwrapping
    return -2.0 * spec.strength * np.angle(arr) * arr


def generator_array(arr, grid, axes, spec: GeneratorSpec) -> np.ndarray:
    return kinetic_array(arr, grid, axes, spec) + nonlinear_array(arr, grid, axes, spec)


def _axes(psi: ComplexField):
    return tuple(range(psi.grid.n))


def apply_N(psi: ComplexField, eps: float = 1e-12) -> ComplexField:
    """Pointwise ``|grad psi|^2 psi / (|psi|^2 + eps)``.

    Homogeneous of degree one when ``eps`` is rescaled by ``|c|^2``.
    """
    return ComplexField(psi.grid, n_array(psi.values, psi.grid, _axes(psi), eps))


def apply_generator(psi: ComplexField, spec: GeneratorSpec) -> ComplexField:
    """Return ``F psi`` for the generator described by ``spec``."""
    return ComplexField(psi.grid, generator_array(psi.values, psi.grid, _axes(psi), spec))


def apply_nonlinear(psi: ComplexField, spec: GeneratorSpec) -> ComplexField:
    return ComplexField(psi.grid, nonlinear_array(psi.values, psi.grid, _axes(psi), spec))


def norm_hermiticity_defect(psi: ComplexField, spec: GeneratorSpec) -> float:
    """``Im (psi, F psi)``; zero for a norm-preserving generator."""
    return inner_product(psi, apply_generator(psi, spec)).imag


def regularized_points(psi: ComplexField, spec: GeneratorSpec, threshold: float = 1e-6) -> int:
    """Number of nodes where epsilon changes ``1/|psi|^2`` by more than ``threshold`` (relative).

    Zero for the linear generator and for ``epsilon == 0``.
    """
    if spec.is_linear or spec.nonlinearity == "kostin" or spec.epsilon == 0:
        return 0
    dens = np.abs(psi.values) ** 2
    return int(np.count_nonzero(spec.epsilon > threshold * (dens + spec.epsilon)))
