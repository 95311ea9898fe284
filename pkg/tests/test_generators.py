import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlamp.errors import SingularPointError
from nlamp.generators import (
    GeneratorSpec,
    apply_generator,
    apply_N,
    apply_nonlinear,
    norm_hermiticity_defect,
    regularized_points,
)
from nlamp.grid import ComplexField, GridSpec, laplacian
from nlamp.states import delta_r, gaussian, plane_wave

G = GridSpec(1, 256, 16.0)


def _nowhere_vanishing(seed):
    rng = np.random.default_rng(seed)
    y = G.coords
    amp = 1.0 + 0.3 * np.cos(2 * np.pi * y / G.extent + rng.uniform(0, 6))
    ph = rng.uniform(-1, 1) * np.sin(2 * np.pi * 2 * y / G.extent) + rng.uniform(-1, 1) * np.cos(2 * np.pi * y / G.extent)
    return ComplexField(G, amp * np.exp(1j * ph))


@given(st.integers(0, 2**32 - 1), st.sampled_from([2.0, 1j, -3 + 4j]))
def test_N_is_complex_homogeneous(seed, c):
    psi = _nowhere_vanishing(seed)
    lhs = apply_N(psi.scaled(c), eps=0.0).values
    rhs = c * apply_N(psi, eps=0.0).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs)) + 1e-14


def test_N_homogeneous_with_rescaled_epsilon():
    psi = gaussian(G, 1.0)
    c = -3 + 4j
    lhs = apply_N(psi.scaled(c), eps=1e-12 * abs(c) ** 2).values
    rhs = c * apply_N(psi, eps=1e-12).values
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_N_of_delta_family_closed_form():
    g = GridSpec(1, 1024, 16.0)
    r = 5.0
    d = delta_r(g, r)
    y2 = g.radius_squared()
    expect = 4 * r * r * y2 * d.values
    got = apply_N(d, eps=1e-30).values
    assert np.max(np.abs(got - expect)) < 1e-8 * np.max(np.abs(expect))
    dg = laplacian(d).values + got
    assert np.max(np.abs(dg - (8 * r * r * y2 - 2 * r) * d.values)) < 1e-8 * np.max(np.abs(expect))


@pytest.mark.parametrize("m", [0, 1, 17, 64, 127, -127])
def test_plane_wave_annihilated_by_dg_part(m):
    g = GridSpec(1, 256, 2 * math.pi)
    pw = plane_wave(g, float(m))
    out = apply_nonlinear(pw, GeneratorSpec.dg(1.0, epsilon=0.0)).values
    assert np.max(np.abs(out)) < 1e-10


def test_plane_wave_residual_with_epsilon_is_k2_eps():
    g = GridSpec(1, 256, 2 * math.pi)
    pw = plane_wave(g, 100.0)
    out = apply_nonlinear(pw, GeneratorSpec.dg(1.0, epsilon=1e-12)).values
    assert np.max(np.abs(out)) == pytest.approx(100.0**2 * 1e-12, rel=1e-3)


@pytest.mark.parametrize(
    "spec",
    [GeneratorSpec.linear(), GeneratorSpec.dg(0.3), GeneratorSpec.bbm(0.7), GeneratorSpec.kostin(0.4)],
    ids=lambda s: s.nonlinearity,
)
@given(seed=st.integers(0, 2**32 - 1))
def test_norm_hermiticity_on_smooth_states(spec, seed):
    rng = np.random.default_rng(seed)
    psi = gaussian(G, rng.uniform(0.5, 1.5), center=rng.uniform(-1, 1), momentum=rng.uniform(-2, 2))
    assert abs(norm_hermiticity_defect(psi, spec)) < 1e-8


def test_singular_point_raises_without_regularization():
    g = GridSpec(1, 64, 8.0)
    vals = g.coords.astype(complex)  # odd, vanishes at y = 0 with unit slope
    vals[32] = 0.0
    with pytest.raises(SingularPointError) as ei:
        apply_N(ComplexField(g, vals), eps=0.0)
    assert ei.value.index == (32,)


def test_bbm_and_kostin_forms():
    psi = gaussian(G, 1.0, momentum=0.5)
    m = apply_nonlinear(psi, GeneratorSpec.bbm(2.0, epsilon=0.0)).values
    assert np.allclose(m, 2.0 * np.log(np.abs(psi.values)) * psi.values, rtol=1e-13, atol=1e-300)
    k = apply_nonlinear(psi, GeneratorSpec.kostin(1.5)).values
    assert np.allclose(k, -3.0 * np.angle(psi.values) * psi.values, rtol=1e-13)


def test_linear_generator_is_kinetic():
    psi = gaussian(G, 1.0)
    out = apply_generator(psi, GeneratorSpec.linear(mass=2.0, hbar=3.0))
    assert np.allclose(out.values, -(9.0 / 4.0) * laplacian(psi).values)


def test_regularized_points_counts_tails():
    psi = gaussian(G, 0.5)
    assert regularized_points(psi, GeneratorSpec.dg(1.0, epsilon=0.0)) == 0
    assert regularized_points(psi, GeneratorSpec.dg(1.0, epsilon=1e-12)) > 0
    assert regularized_points(psi, GeneratorSpec.linear()) == 0


def test_spec_validation():
    with pytest.raises(ValueError):
        GeneratorSpec("cubic", 1.0)
    with pytest.raises(ValueError):
        GeneratorSpec.dg(1.0, mass=0.0)
    with pytest.raises(ValueError):
        GeneratorSpec.dg(1.0, epsilon=-1.0)
    assert GeneratorSpec.bbm(1.0).D == 0.0
    assert GeneratorSpec.dg(0.0).is_linear
