import itertools
import math

import numpy as np
import pytest
import sympy as sp

from nlamp import asymptotics as asy
from nlamp.errors import FitConditioningError
from nlamp.grid import GridSpec

TF = asy.TEST_FUNCTIONS


def _moment_oracle(n, p, r):
    """Expand |y|^p multinomially into products of one-dimensional symbolic moments."""
    y = sp.symbols("y", real=True)
    rr = sp.nsimplify(r)
    one_d = {}
    total = sp.Integer(0)
    for ks in itertools.product(range(p // 2 + 1), repeat=n):
        if sum(ks) != p // 2:
            continue
        coeff = sp.factorial(p // 2)
        term = sp.Integer(1)
        for k in ks:
            coeff /= sp.factorial(k)
            if k not in one_d:
                one_d[k] = sp.integrate(y ** (2 * k) * sp.exp(-rr * y**2), (y, -sp.oo, sp.oo))
            term *= one_d[k]
        total += coeff * term
    return float(total)


@pytest.mark.parametrize("n,p,r", [(1, 0, 1), (1, 6, 0.5), (2, 2, 10), (2, 4, 1), (3, 6, 100), (3, 0, 0.5)])
def test_moment_exact_matches_symbolic_oracle(n, p, r):
    assert asy.moment_exact(n, p, r) == pytest.approx(_moment_oracle(n, p, r), rel=1e-12)


def test_moment_quadrature_grid():
    for n, p, r in itertools.product([1, 2, 3], [0, 2, 4, 6], [0.5, 1, 10, 100]):
        ex = asy.moment_exact(n, p, r)
        assert abs(asy.moment_quadrature(n, p, r) - ex) < 1e-9 * ex


def test_moment_errors_and_exponent():
    with pytest.raises(OverflowError):
        asy.moment_exact(3, 340, 1.0)
    with pytest.raises(ValueError):
        asy.moment_exact(1, 3, 1.0)
    with pytest.raises(ValueError):
        asy.moment_exact(1, 2, 0.0)
    # p = 2 pairs with N: net growth r^1 in any dimension
    assert all(asy.net_r_exponent(n, 2) == 1.0 for n in (1, 2, 3))


def test_integrate_rn_unit_gaussian():
    for n in (1, 2, 3):
        val = asy.integrate_rn(lambda x: np.exp(-np.sum(x * x, axis=-1)), n)
        assert val == pytest.approx(math.pi ** (n / 2), rel=1e-10)


def test_pair_N_gaussian_symbolic_oracle():
    y = sp.symbols("y", real=True)
    r = sp.symbols("r", positive=True)
    delta = sp.sqrt(r / sp.pi) * sp.exp(-r * y**2)
    expr = sp.simplify(sp.integrate(4 * r**2 * y**2 * delta * sp.exp(-(y**2)), (y, -sp.oo, sp.oo)))
    for rv in (10.0, 137.0, 1000.0):
        assert asy.pair_N_gaussian(TF["gauss"], rv, 1) == pytest.approx(float(expr.subs(r, rv)), rel=1e-10)


@pytest.mark.parametrize("name,n", [("r2_gauss", 1), ("gauss", 3), ("odd_gauss", 2)])
def test_expansion_other_functions(name, n):
    fit = asy.verify_N_expansion(TF[name], np.logspace(1, 3, 12), n)
    assert fit.slope == pytest.approx(fit.expected_slope, abs=0.005 * 2 * n)
    if fit.expected_intercept != 0:
        assert fit.intercept == pytest.approx(fit.expected_intercept, rel=0.02)
        assert abs(fit.residual_exponent + 1) < 0.15
    else:
        assert abs(fit.intercept) < 1e-8


def test_expansion_needs_two_decades():
    with pytest.raises(FitConditioningError):
        asy.verify_N_expansion(TF["gauss"], np.logspace(1, 2, 10), 1)


@pytest.mark.parametrize("n,points,extent", [(1, 1024, 16.0), (2, 192, 12.0)])
def test_grid_pairing_agrees_with_closed_form(n, points, extent):
    g = GridSpec(n, points, extent)
    for r in (5.0, 20.0):
        a = asy.pair_N_grid(TF["shifted_gauss"], r, g)
        b = asy.pair_N_gaussian(TF["shifted_gauss"], r, n)
        assert a == pytest.approx(b, rel=1e-5)


def test_delta_weak_limit():
    fit = asy.verify_delta_weak_limit(TF["cos_gauss"], np.logspace(1, 3, 8), 1)
    assert abs(fit.residual_exponent + 1) < 0.15
    assert asy.pair_delta(lambda x: np.ones(x.shape[:-1]), 50.0, 2) == pytest.approx(1.0, abs=1e-12)


def test_bbm_kostin_images_on_delta_family():
    g = GridSpec(1, 512, 16.0)
    im = asy.bbm_kostin_on_gaussian(7.0, g, p=1.3, q=0.8)
    assert im.m_mismatch < 1e-9
    assert im.k_max == 0.0
    assert im.m_imag_max == 0.0


@pytest.mark.parametrize("n", [1, 2])
def test_bbm_pairing_grows_logarithmically(n):
    fit = asy.bbm_pairing_growth(TF["gauss"], np.logspace(1, 4, 10), n)
    assert fit.slope == pytest.approx(0.5 * n, rel=0.02)
