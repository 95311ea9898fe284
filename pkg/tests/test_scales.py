import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlamp import scales as sc
from nlamp.errors import UnitError

LP = 1.6e-33


def test_nu_ratio_examples():
    assert sc.nu_ratio(0.5, 1.0, 1.0) == 1.0
    assert sc.nu_ratio(0.0, 2.0, 1.0) == 0.0
    hb, m = 1.054571817e-27, 9.1e-28
    assert sc.nu_ratio(sc.diffusion(hb / (2 * m)), sc.mass(m), sc.action(hb)) == pytest.approx(1.0, rel=1e-15)


def test_amplification_ratio_examples():
    assert sc.amplification_ratio(1.0, 1.0, 1.0) == 1.0
    assert sc.amplification_ratio(1e-20, 1 / LP**2, 1e10 * LP) == pytest.approx(1.0, rel=1e-12)
    # second arithmetic path: (1e-126) * (1e30 / 1.6e-33)^2
    direct = 1e-126 * (1e30 / 1.6e-33) ** 2
    assert sc.amplification_ratio(1e-126, 1 / LP**2, 1e30) == pytest.approx(direct, rel=1e-12)
    assert sc.amplification_ratio(1e-126, 1 / LP**2, 1e30) == pytest.approx(0.390625, rel=1e-12)


def test_fundamental_length_examples():
    assert sc.fundamental_length(1.0, LP) == LP
    fl = sc.fundamental_length(1e-20, LP)
    assert 0.5 <= fl / 1e-23 <= 2.0
    assert sc.fundamental_length(1e-120, LP) == pytest.approx(1e60 * LP, rel=1e-12)


def test_nu_for_wavelength_examples():
    assert sc.nu_for_wavelength(LP, LP) == 1.0
    assert sc.same_order(sc.nu_for_wavelength(1e30, LP), 1e-126)
    assert sc.nu_for_wavelength(1e10 * LP, LP) == pytest.approx(1e-20, rel=1e-12)


@given(st.floats(min_value=-200, max_value=0))
def test_round_trip(log_nu):
    nu = 10.0**log_nu
    back = sc.nu_for_wavelength(sc.fundamental_length(nu, LP), LP)
    assert back == pytest.approx(nu, rel=1e-12)
    assert sc.amplification_ratio(nu, 1 / LP**2, sc.fundamental_length(nu, LP)) == pytest.approx(1.0, rel=1e-12)


def test_unit_mismatch_raises():
    with pytest.raises(UnitError):
        sc.amplification_ratio(1.0, sc.length(1.0), sc.length(1.0))
    with pytest.raises(UnitError):
        sc.fundamental_length(1e-20, sc.mass(1.0))
    with pytest.raises(UnitError):
        sc.nu_ratio(sc.length(1.0), 1.0, 1.0)
    assert (sc.sharpness(4.0) * sc.length(0.5) ** 2).require((0, 0, 0), "x") == 1.0


def test_positivity():
    with pytest.raises(ValueError):
        sc.fundamental_length(0.0)
    with pytest.raises(ValueError):
        sc.PhysicalConstants(planck_length=-1.0)


def test_linear_rate_constant_is_a_parameter():
    base = sc.linear_rate(1.0, 1.0, 2.0)
    assert base == 0.25
    assert sc.linear_rate(1.0, 1.0, 2.0, b_expectation=2.0, constant=3.0) == 1.5


def test_scale_query_completion():
    q = sc.ScaleQuery(nu=1e-20).complete()
    assert q.L == pytest.approx(1.6e-23, rel=1e-12)
    assert sc.ScaleQuery(nu=1e-20).ratio() == pytest.approx(1.0, rel=1e-12)
    c = sc.PhysicalConstants()
    qd = sc.ScaleQuery(D=c.hbar / (2 * c.mass)).complete(c)
    assert qd.nu == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sc.ScaleQuery().complete()


def test_table_csv_columns():
    text = sc.table_csv(sc.scales_table())
    head = text.splitlines()[0]
    assert head == "quantity,value,units,reference"
    assert any(line.startswith("nu_for_hubble_wavelength,") for line in text.splitlines())
    assert math.isclose(float(dict((l.split(",")[0], l.split(",")[1]) for l in text.splitlines()[1:])["amplification_ratio"]), 1.0)
