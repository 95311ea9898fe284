import math

import numpy as np
import pytest

from nlamp.errors import IntegrationError
from nlamp.evolution import IntegratorConfig, evolve, evolve_batch, evolve_two_particle, trajectory
from nlamp.generators import GeneratorSpec
from nlamp.grid import GridSpec, TwoParticleField, schmidt_spectrum
from nlamp.states import gaussian

G = GridSpec(1, 256, 16.0)


def test_zero_time_returns_input():
    psi = gaussian(G)
    assert evolve(psi, GeneratorSpec.dg(0.1), 0.0) is psi


def test_free_spreading_matches_closed_form():
    # |psi|^2 std sigma spreads as sigma^2 + (hbar t / (2 m sigma))^2
    rows = trajectory(gaussian(GridSpec(1, 512, 32.0), 1.0), GeneratorSpec.linear(), 1.0, IntegratorConfig(dt=0.01))
    assert rows[-1][0] == pytest.approx(1.0)
    assert rows[-1][3] == pytest.approx(1.25, rel=1e-9)


@pytest.mark.parametrize("scheme", ["split", "rk4"])
def test_dg_norm_conserved(scheme):
    psi = gaussian(G, 1.0, momentum=1.0)
    out = evolve(psi, GeneratorSpec.dg(0.05), 0.5, IntegratorConfig(dt=1e-3 if scheme == "split" else 2e-4, scheme=scheme))
    assert abs(out.norm() - psi.norm()) < 1e-6


def _final(dt):
    # coarse grid keeps the explicit substep far from its stability limit
    psi = gaussian(GridSpec(1, 64, 16.0), 0.8, momentum=0.7)
    return evolve(psi, GeneratorSpec.dg(0.2), 0.2, IntegratorConfig(dt=dt)).values


def test_step_halving_second_order():
    a, b, c = _final(0.02), _final(0.01), _final(0.005)
    e1 = np.linalg.norm(a - b)
    e2 = np.linalg.norm(b - c)
    assert e1 / e2 >= 3.5


def test_rk4_and_split_agree():
    psi = gaussian(G, 0.8, momentum=0.7)
    spec = GeneratorSpec.dg(0.2)
    a = evolve(psi, spec, 0.1, IntegratorConfig(dt=1e-3)).values
    b = evolve(psi, spec, 0.1, IntegratorConfig(dt=2e-4, scheme="rk4")).values
    assert np.max(np.abs(a - b)) < 1e-5


def test_norm_drift_raises_with_failure_time():
    psi = gaussian(G, 0.2)
    cfg = IntegratorConfig(dt=2e-2, scheme="rk4", tolerance=1e-12)
    with pytest.raises(IntegrationError) as ei:
        evolve(psi, GeneratorSpec.dg(0.5), 1.0, cfg)
    assert 0 < ei.value.time <= 1.0
    assert ei.value.drift > ei.value.limit


def test_batch_matches_individual_runs():
    spec = GeneratorSpec.dg(0.1)
    cfg = IntegratorConfig(dt=1e-3)
    states = [gaussian(G, s, momentum=k) for s, k in [(0.7, 0.0), (1.0, 1.0), (1.3, -0.5)]]
    stack = np.stack([s.values for s in states])
    out = evolve_batch(stack, G, spec, 0.05, cfg)
    for row, s in zip(out, states):
        assert np.max(np.abs(row - evolve(s, spec, 0.05, cfg).values)) < 1e-13


def test_separation_keeps_product_states_product():
    g = GridSpec(1, 64, 12.0)
    a = gaussian(g, 0.8, center=-0.5)
    b = gaussian(g, 1.0, center=0.7, momentum=1.0)
    spec = GeneratorSpec.dg(0.05)
    cfg = IntegratorConfig(dt=1e-3)
    out = evolve_two_particle(TwoParticleField.product(a, b), spec, spec, 0.2, cfg)
    sv = schmidt_spectrum(out)
    assert sv[1] / sv[0] < 1e-6
    # and each factor follows its own one-particle evolution
    ea = evolve(a, spec, 0.2, cfg).values
    eb = evolve(b, spec, 0.2, cfg).values
    assert np.max(np.abs(out.values - np.outer(ea, eb))) < 1e-6


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(dt=0.0)
    with pytest.raises(ValueError):
        IntegratorConfig(scheme="euler")
    with pytest.raises(ValueError):
        evolve(gaussian(G), GeneratorSpec.linear(), -1.0)
