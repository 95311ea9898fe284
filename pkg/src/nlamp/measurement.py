"""Observables, projective measurements on particle a, and the signaling functionals.

Conventions
-----------
``E(B, t | A)``
    Weighted expectation of B (acting on particle b) over the mixture left
    by a complete projective measurement of particle a, each member evolved
    for time t.
``E1(B | A)``
    Its first time derivative at t = 0,
    ``(2 / hbar) sum_l p_l Im <B phi_l | F_b phi_l>``.
``delta1(..., basis1, basis2)``
    ``E1(B | basis1) - E1(B | basis2)``.

A position measurement projects onto grid nodes; a momentum measurement
onto discrete Fourier modes.  Both bases are orthonormal and complete, so
every member is an exact product state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import EmptyMixtureError, FitConditioningError, GridMismatchError
from .evolution import IntegratorConfig, evolve_batch
from .fitting import FitResult
from .generators import GeneratorSpec, generator_array, nonlinear_array
from .grid import ComplexField, GridSpec, TwoParticleField

__all__ = [
    "Observable",
    "PositionDiagonal",
    "MomentumDiagonal",
    "SmoothKernel",
    "RankOne",
    "Mixture",
    "Member",
    "measure_first_particle",
    "expectation",
    "expectation_after_delay",
    "first_order_rate",
    "nonlinear_rate",
    "delta1",
    "finite_difference_check",
    "reduced_density_b",
    "expectation_on_b",
]

POSITION = "position"
MOMENTUM = "momentum"


# -- observables -------------------------------------------------------------


class Observable:
    """Hermitian operator on one-particle fields over ``grid``."""

    grid: GridSpec

    def apply_array(self, arr: np.ndarray) -> np.ndarray:
        """Apply to ``arr`` whose trailing axes are ``grid.shape``."""
        raise NotImplementedError

    def apply(self, f: ComplexField) -> ComplexField:
        if f.grid != self.grid:
            raise GridMismatchError("observable and state live on different grids")
        return ComplexField(f.grid, self.apply_array(f.values))

    def kernel_diagonal(self) -> np.ndarray:
        """``<delta_w | B | delta_w>`` at every node, for kernel observables."""
        raise TypeError(f"{type(self).__name__} has no smooth kernel diagonal")


def _grid_axes(arr, grid):
    return tuple(range(arr.ndim - grid.n, arr.ndim))


@dataclass(frozen=True, eq=False)
class PositionDiagonal(Observable):
    grid: GridSpec
    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b)
        if np.iscomplexobj(b):
            if np.any(b.imag != 0):
                raise ValueError("PositionDiagonal values must be real")
            b = b.real
        object.__setattr__(self, "b", np.array(b, dtype=float).reshape(self.grid.shape))

    def apply_array(self, arr):
        return self.b * arr


@dataclass(frozen=True, eq=False)
class MomentumDiagonal(Observable):
    """Multiplier ``b_tilde[k]`` on discrete Fourier modes (numpy fft ordering)."""

    grid: GridSpec
    b_tilde: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b_tilde)
        if np.iscomplexobj(b):
            if np.any(b.imag != 0):
                raise ValueError("MomentumDiagonal values must be real")
            b = b.real
        object.__setattr__(self, "b_tilde", np.array(b, dtype=float).reshape(self.grid.shape))

    def apply_array(self, arr):
        axes = _grid_axes(arr, self.grid)
        return np.fft.ifftn(self.b_tilde * np.fft.fftn(arr, axes=axes), axes=axes)


@dataclass(frozen=True, eq=False)
class SmoothKernel(Observable):
    """``(B psi)(x) = sum_y K[x, y] psi(y) h^n`` with ``K`` hermitian."""

    grid: GridSpec
    K: np.ndarray

    def __post_init__(self):
        K = np.asarray(self.K, dtype=np.complex128)
        if K.shape != (self.grid.size, self.grid.size):
            raise GridMismatchError(f"kernel shape {K.shape} does not match grid")
        if not np.array_equal(K, K.conj().T):
            raise ValueError("SmoothKernel must be exactly hermitian")
        object.__setattr__(self, "K", K)

    def apply_array(self, arr):
        lead = arr.shape[: arr.ndim - self.grid.n]
        flat = arr.reshape(lead + (self.grid.size,))
        out = flat @ self.K.T * self.grid.cell_volume
        return out.reshape(arr.shape)

    def kernel_diagonal(self):
        return np.real(np.diag(self.K)).reshape(self.grid.shape)


@dataclass(frozen=True, eq=False)
class RankOne(Observable):
    """Projector ``|chi><chi|`` onto a normalized field."""

    chi: ComplexField
    grid: GridSpec = field(init=False)

    def __post_init__(self):
        nrm = self.chi.norm()
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"RankOne needs a normalized chi, got norm {nrm}")
        object.__setattr__(self, "grid", self.chi.grid)

    def overlaps(self, arr):
        axes = _grid_axes(arr, self.grid)
        return np.sum(np.conj(self.chi.values) * arr, axis=axes) * self.grid.cell_volume

    def apply_array(self, arr):
        ov = np.asarray(self.overlaps(arr))
        return ov.reshape(ov.shape + (1,) * self.grid.n) * self.chi.values

    def kernel_diagonal(self):
        return np.abs(self.chi.values) ** 2


# -- mixtures ----------------------------------------------------------------


@dataclass(frozen=True)
class Member:
    weight: float
    state: ComplexField
    partner: Optional[ComplexField]
    label: int


@dataclass(frozen=True, eq=False)
class Mixture:
    """Weighted ensemble of normalized particle-b states.

    ``states`` is a stack of shape ``(M,) + grid.shape``.  ``raw_weights``
    are the outcome probabilities before truncation; ``weights`` are the
    kept ones, renormalized to sum to one.
    """

    grid: GridSpec
    weights: np.ndarray
    states: np.ndarray
    labels: np.ndarray
    basis: str = ""
    raw_weights: Optional[np.ndarray] = None
    partner_grid: Optional[GridSpec] = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("mixture weights must be non-negative")
        if abs(w.sum() - 1.0) > 1e-10:
            raise ValueError(f"mixture weights sum to {w.sum()}, not 1")
        st = np.asarray(self.states, dtype=np.complex128)
        if st.shape != (len(w),) + self.grid.shape:
            raise GridMismatchError(f"state stack shape {st.shape} does not match weights/grid")
        norms = np.sqrt(np.sum(np.abs(st) ** 2, axis=tuple(range(1, st.ndim))) * self.grid.cell_volume)
        if np.any(np.abs(norms - 1.0) > 1e-10):
            raise ValueError("mixture members must be normalized")
        w.setflags(write=False)
        st.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "states", st)

    def __len__(self):
        return len(self.weights)

    @property
    def total_probability(self) -> float:
        return float(np.sum(self.raw_weights)) if self.raw_weights is not None else 1.0

    @property
    def dropped_weight(self) -> float:
        if self.raw_weights is None:
            return 0.0
        return self.total_probability - float(np.sum(self.raw_weights[self.labels]))

    def partner(self, i: int) -> Optional[ComplexField]:
        """Particle-a factor of member ``i``: a grid delta or a normalized plane wave."""
        g = self.partner_grid
        if g is None:
            return None
        lab = int(self.labels[i])
        if self.basis == POSITION:
            v = np.zeros(g.size, dtype=complex)
            v[lab] = 1.0 / math.sqrt(g.cell_volume)
            return ComplexField(g, v)
        e = np.zeros(g.size, dtype=complex)
        e[lab] = 1.0
        v = np.fft.ifftn(e.reshape(g.shape)) * math.sqrt(g.size / g.cell_volume)
        return ComplexField(g, v)

    @property
    def members(self) -> list[Member]:
        return [
            Member(float(w), ComplexField(self.grid, s), self.partner(i), int(lab))
            for i, (w, s, lab) in enumerate(zip(self.weights, self.states, self.labels))
        ]


def _check_normalized(psi: TwoParticleField, tol=1e-8):
    nrm = psi.norm()
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"two-particle state must be normalized, norm = {nrm}")


def measure_first_particle(
    psi: TwoParticleField, basis: str = POSITION, truncation: float = 1e-8
) -> Mixture:
    """Projective measurement of particle a in the grid or Fourier basis.

    Outcomes with probability below ``truncation`` are dropped and the rest
    renormalized (relative weights untouched).
    """
    if not 0 <= truncation <= 1e-3:
        raise ValueError(f"truncation must lie in [0, 1e-3], got {truncation}")
    _check_normalized(psi)
    ga, gb = psi.grid_a, psi.grid_b
    if basis == POSITION:
        coeff = psi.values
    elif basis == MOMENTUM:
        tv = psi.tensor_values()
        coeff = np.fft.fftn(tv, axes=tuple(range(ga.n)), norm="ortho").reshape(psi.values.shape)
    else:
        raise ValueError(f"basis must be 'position' or 'momentum', got {basis!r}")
    row = np.sum(np.abs(coeff) ** 2, axis=1) * gb.cell_volume
    raw = row * ga.cell_volume
    keep = np.flatnonzero(raw >= truncation) if truncation > 0 else np.flatnonzero(raw > 0)
    if keep.size == 0:
        raise EmptyMixtureError(f"all {raw.size} outcomes fall below truncation {truncation}")
    kept = raw[keep]
    weights = kept / kept.sum()
    states = coeff[keep] / np.sqrt(row[keep])[:, None]
    states = states.reshape((keep.size,) + gb.shape)
    return Mixture(gb, weights, states, keep, basis, raw, ga)


# -- expectations ------------------------------------------------------------


def _expect_stack(stack: np.ndarray, B: Observable) -> np.ndarray:
    axes = _grid_axes(stack, B.grid)
    vals = np.sum(np.conj(stack) * B.apply_array(stack), axis=axes) * B.grid.cell_volume
    return vals


def expectation(state: Union[ComplexField, Mixture], B: Observable) -> float:
    """``<psi|B|psi>``, or the weight average over a mixture."""
    if isinstance(state, Mixture):
        vals = _expect_stack(state.states, B)
        weights = state.weights
    else:
        if state.grid != B.grid:
            raise GridMismatchError("observable and state live on different grids")
        vals = np.atleast_1d(_expect_stack(state.values, B))
        weights = np.ones(1)
    if np.max(np.abs(vals.imag), initial=0.0) > 1e-10 * max(1.0, np.max(np.abs(vals))):
        raise ArithmeticError("expectation has a non-negligible imaginary part")
    return float(np.dot(weights, vals.real))


def reduced_density_b(psi: TwoParticleField) -> np.ndarray:
    """Matrix of ``rho_b`` in orthonormal grid coordinates."""
    c = psi.values * math.sqrt(psi.cell_volume)
    return c.T @ c.conj()


def expectation_on_b(psi: TwoParticleField, B: Observable) -> float:
    """``<Psi| 1 (x) B |Psi>``."""
    vol = psi.cell_volume
    stack = psi.values.reshape((psi.grid_a.size,) + psi.grid_b.shape)
    vals = np.sum(np.conj(stack) * B.apply_array(stack)) * vol
    return float(vals.real)


def expectation_after_delay(
    psi: TwoParticleField,
    basis: str,
    B: Observable,
    t: float,
    spec: GeneratorSpec,
    cfg: IntegratorConfig = IntegratorConfig(),
    truncation: float = 1e-8,
) -> float:
    """``E(B, t | basis)``: measure particle a, evolve every b member for ``t``, average B.

    Only particle b's generator matters: the particle-a factor of each
    member is traced out by B.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    mix = measure_first_particle(psi, basis, truncation)
    stack = evolve_batch(mix.states, mix.grid, spec, t, cfg)
    vals = _expect_stack(stack, B)
    return float(np.dot(mix.weights, vals.real))


# -- first-order rates --------------------------------------------------------


def _rate(mixture: Mixture, B: Observable, spec: GeneratorSpec, op) -> float:
    stack = np.asarray(mixture.states)
    axes = tuple(range(1, stack.ndim))
    Fphi = op(stack, mixture.grid, axes, spec)
    Bphi = B.apply_array(stack)
    brackets = np.sum(np.conj(Bphi) * Fphi, axis=axes) * mixture.grid.cell_volume
    return float((2.0 / spec.hbar) * np.dot(mixture.weights, brackets.imag))


def first_order_rate(mixture: Mixture, B: Observable, spec: GeneratorSpec) -> float:
    """``E1(B|A) = (2/hbar) sum_l p_l Im <B phi_l | F_b phi_l>`` over the mixture."""
    return _rate(mixture, B, spec, generator_array)


def nonlinear_rate(mixture: Mixture, B: Observable, spec: GeneratorSpec) -> float:
    """Contribution of the nonlinear part of ``F_b`` alone to ``E1``."""
    return _rate(mixture, B, spec, nonlinear_array)


def delta1(
    psi: TwoParticleField,
    B: Observable,
    basis1: str,
    basis2: str,
    spec: GeneratorSpec,
    truncation: float = 1e-8,
) -> float:
    """``Delta1(B | basis1, basis2) = E1(B|basis1) - E1(B|basis2)``."""
    m1 = measure_first_particle(psi, basis1, truncation)
    m2 = measure_first_particle(psi, basis2, truncation)
    return first_order_rate(m1, B, spec) - first_order_rate(m2, B, spec)


def finite_difference_check(
    psi: TwoParticleField,
    B: Observable,
    basis: str,
    spec: GeneratorSpec,
    t_list: Sequence[float],
    cfg: IntegratorConfig = IntegratorConfig(),
    truncation: float = 1e-8,
) -> FitResult:
    """Fit ``E(B, t | basis)`` by a quadratic in t and compare with ``E1`` and ``<B>``.

    ``slope``/``intercept`` are the fitted linear and constant coefficients;
    ``expected_slope`` is ``first_order_rate`` and ``expected_intercept`` is
    ``<Psi| 1 (x) B |Psi>``.
    """
    t = np.asarray(sorted(t_list), dtype=float)
    if t.size < 3 or np.any(t <= 0):
        raise FitConditioningError("need at least three positive times")
    if t[-1] < 2.0 * t[0]:
        raise FitConditioningError(f"times span only a factor {t[-1] / t[0]:.3g} (< 2)")
    mix = measure_first_particle(psi, basis, truncation)
    values = []
    for ti in t:
        stack = evolve_batch(mix.states, mix.grid, spec, float(ti), cfg)
        values.append(float(np.dot(mix.weights, _expect_stack(stack, B).real)))
    values = np.asarray(values)
    e0 = expectation(mix, B)
    # E(t) - E(0) = c1 t + c2 t^2 with E(0) pinned by the t = 0 mixture
    A = np.column_stack([t, t * t])
    (c1, c2), *_ = np.linalg.lstsq(A, values - e0, rcond=None)
    # free-intercept fit reported separately so the intercept is a genuine check
    coeffs = np.polyfit(t, values, 2)
    intercept = float(coeffs[-1])
    model = np.polyval(coeffs, t)
    rate = first_order_rate(mix, B, spec)
    rel = np.max(np.abs(values - model)) / max(np.max(np.abs(values)), 1e-300)
    return FitResult(
        slope=float(c1),
        intercept=intercept,
        residual_exponent=float("nan"),
        x_range=(float(t[0]), float(t[-1])),
        max_rel_residual=float(rel),
        expected_slope=rate,
        expected_intercept=expectation_on_b(psi, B),
        extra={"curvature": float(c2), "values": values.tolist(), "e0": e0},
    )
