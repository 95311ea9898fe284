import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlamp.errors import EmptyMixtureError, FitConditioningError
from nlamp.evolution import IntegratorConfig
from nlamp.generators import GeneratorSpec
from nlamp.grid import GridSpec
from nlamp.measurement import (
    MomentumDiagonal,
    PositionDiagonal,
    RankOne,
    SmoothKernel,
    delta1,
    expectation,
    expectation_after_delay,
    expectation_on_b,
    finite_difference_check,
    first_order_rate,
    measure_first_particle,
    reduced_density_b,
)
from nlamp.states import epr_state, gaussian

G = GridSpec(1, 128, 16.0)
PSI = epr_state(G, 0.4)


def _observables(g):
    y = g.coords
    K = np.exp(-0.5 * (y[:, None] ** 2 + y[None, :] ** 2) - 0.1 * (y[:, None] - y[None, :]) ** 2)
    return [
        RankOne(gaussian(g, 1.0)),
        PositionDiagonal(g, np.exp(-0.5 * y**2)),
        MomentumDiagonal(g, 1.0 / (1.0 + g.wavenumbers**2)),
        SmoothKernel(g, K.astype(complex)),
    ]


@pytest.mark.parametrize("basis", ["position", "momentum"])
def test_mixture_is_normalized(basis):
    mix = measure_first_particle(PSI, basis)
    assert mix.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert mix.dropped_weight < 1e-6
    norms = np.sqrt(np.sum(np.abs(mix.states) ** 2, axis=1) * G.cell_volume)
    assert np.allclose(norms, 1.0, atol=1e-12)
    assert mix.total_probability == pytest.approx(1.0, abs=1e-12)


def test_momentum_members_are_plane_waves():
    mix = measure_first_particle(PSI, "momentum", truncation=1e-6)
    mods = np.abs(mix.states)
    assert np.max(np.abs(mods - mods.mean(axis=1, keepdims=True))) < 1e-10


def test_partner_factors_are_orthonormal_basis_states():
    for basis in ("position", "momentum"):
        m = measure_first_particle(PSI, basis).members
        a, b = m[0].partner, m[1].partner
        assert np.vdot(a.values, a.values).real * G.cell_volume == pytest.approx(1.0)
        assert abs(np.vdot(a.values, b.values)) * G.cell_volume < 1e-12


@pytest.mark.parametrize("k", range(4))
def test_no_signal_at_time_zero(k):
    B = _observables(G)[k]
    ep = expectation(measure_first_particle(PSI, "momentum", 0.0), B)
    eq = expectation(measure_first_particle(PSI, "position", 0.0), B)
    assert abs(ep - eq) < 1e-12
    assert ep == pytest.approx(expectation_on_b(PSI, B), abs=1e-12)


def test_reduced_density_trace_and_hermiticity():
    rho = reduced_density_b(PSI)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(rho, rho.conj().T)


@given(st.floats(0.0, 0.5), st.sampled_from(["position", "momentum"]))
def test_delta1_antisymmetric_under_basis_swap(D, basis):
    other = "momentum" if basis == "position" else "position"
    spec = GeneratorSpec.dg(D)
    B = RankOne(gaussian(G, 1.0))
    assert delta1(PSI, B, basis, other, spec) == pytest.approx(-delta1(PSI, B, other, basis, spec), abs=1e-15)
    assert delta1(PSI, B, basis, basis, spec) == 0.0


def test_linear_delta1_vanishes():
    for B in _observables(G):
        assert abs(delta1(PSI, B, "momentum", "position", GeneratorSpec.linear())) < 1e-10


def test_linear_no_signal_after_delay():
    B = RankOne(gaussian(G, 1.0))
    spec = GeneratorSpec.linear()
    cfg = IntegratorConfig(dt=1e-2)
    for t in (0.1, 0.2):
        d = expectation_after_delay(PSI, "momentum", B, t, spec, cfg) - expectation_after_delay(
            PSI, "position", B, t, spec, cfg
        )
        assert abs(d) < 1e-6


def test_dg_momentum_branch_has_no_nonlinear_rate():
    mix = measure_first_particle(PSI, "momentum")
    B = RankOne(gaussian(G, 1.0))
    lin = first_order_rate(mix, B, GeneratorSpec.linear())
    dg = first_order_rate(mix, B, GeneratorSpec.dg(0.3))
    assert abs(dg - lin) < 1e-10


def test_finite_difference_slope_matches_rate():
    B = RankOne(gaussian(G, 1.0))
    fd = finite_difference_check(PSI, B, "position", GeneratorSpec.dg(0.1), [0.002, 0.004, 0.008], IntegratorConfig(dt=5e-4))
    assert fd.slope == pytest.approx(fd.expected_slope, rel=0.05)
    assert fd.intercept == pytest.approx(fd.expected_intercept, abs=1e-6)


def test_finite_difference_needs_spread_of_times():
    B = RankOne(gaussian(G, 1.0))
    with pytest.raises(FitConditioningError):
        finite_difference_check(PSI, B, "position", GeneratorSpec.dg(0.1), [0.002, 0.003, 0.0035])


def test_truncation_bounds_and_empty_mixture():
    with pytest.raises(ValueError):
        measure_first_particle(PSI, "position", truncation=0.1)
    g = GridSpec(1, 1024, 16.0)
    with pytest.raises(EmptyMixtureError):
        measure_first_particle(epr_state(g, 0.4), "position", truncation=1e-3)


def test_observable_validation():
    with pytest.raises(ValueError):
        RankOne(gaussian(G, 1.0).scaled(2.0))
    K = np.zeros((G.size, G.size), complex)
    K[0, 1] = 1.0
    with pytest.raises(ValueError):
        SmoothKernel(G, K)


def test_rank_one_equals_its_kernel():
    chi = gaussian(G, 1.0, momentum=0.5)
    K = np.outer(chi.values, chi.values.conj())
    K = 0.5 * (K + K.conj().T)
    sk = SmoothKernel(G, K)
    r1 = RankOne(chi)
    f = gaussian(G, 0.7, center=0.3)
    assert np.allclose(sk.apply(f).values, r1.apply(f).values, atol=1e-13)
    assert np.allclose(sk.kernel_diagonal(), r1.kernel_diagonal())
