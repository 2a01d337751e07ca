import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shearasym import scales as sc
from shearasym.kernels import HomogeneitySetup

S05 = HomogeneitySetup(0.5)


def test_c0_conventions():
    assert sc.c0(S05, "printed") == pytest.approx(1.0 / np.log(2.0), rel=1e-15)
    assert sc.c0(S05) == pytest.approx(0.5 / np.log(2.0), rel=1e-15)
    with pytest.raises(ValueError):
        sc.c0(S05, "other")


@pytest.mark.parametrize("a", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_limiting_mass_is_one(a):
    m = sc.ScaleModel.from_setup(HomogeneitySetup(a))
    assert 2 * a * m.c0 * np.log(1 / (1 - a)) / a == pytest.approx(1.0, rel=1e-14)
    assert m.c0 > 0


def test_printed_convention_gives_one_over_a():
    m = sc.ScaleModel.from_setup(S05, "printed")
    assert sc.mass_integral(m, 1e8) == pytest.approx(2.0, rel=1e-6)


def test_eps_spot_value():
    m = sc.ScaleModel.from_setup(S05, "printed")
    assert sc.eps_tau(m, 100.0) == pytest.approx((0.5 * 1.4426950 / 50) ** 2, rel=1e-6)
    m = sc.ScaleModel.from_setup(S05)
    assert sc.eps_tau(m, 100.0) == pytest.approx((0.5 * 0.7213475 / 50) ** 2, rel=1e-6)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.05, 0.95), tau=st.floats(1e-3, 1e8))
def test_delay_residual_exact(a, tau):
    m = sc.ScaleModel.from_setup(HomogeneitySetup(a))
    # zero up to the rounding of the two divisions
    assert abs(sc.delay_residual(m, tau)) <= 4 * np.finfo(float).eps * sc.lambda_tau(m, tau)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.05, 0.95), tau=st.floats(1e-3, 1e8))
def test_delay_residual_exact_rational(a, tau):
    m = sc.ScaleModel.from_setup(HomogeneitySetup(a))
    assert sc.delay_residual_exact(m, tau) == 0


def test_delay_residual_zero_on_decades():
    m = sc.ScaleModel.from_setup(S05)
    assert np.all(sc.delay_residual(m, np.logspace(1, 6, 11)) == 0.0)


@settings(max_examples=50, deadline=None)
@given(a=st.floats(0.05, 0.95), t1=st.floats(1e-2, 1e6), f=st.floats(1.001, 100))
def test_lambda_eps_decreasing(a, t1, f):
    m = sc.ScaleModel.from_setup(HomogeneitySetup(a))
    assert sc.lambda_tau(m, t1) > sc.lambda_tau(m, t1 * f)
    assert sc.log_eps_tau(m, t1) > sc.log_eps_tau(m, t1 * f)


def test_nonpositive_tau_rejected():
    m = sc.ScaleModel.from_setup(S05)
    with pytest.raises(ValueError):
        sc.lambda_tau(m, 0.0)
    with pytest.raises(ValueError):
        sc.log_eps_tau(m, -1.0)


def test_tau0_map():
    assert sc.tau0_map(7.0, 0.0, 3.0) == 7.0
    assert sc.tau0_map(7.0, 3.0 * (1 - 1e-12), 3.0) < 7.0 - 25
    with pytest.raises(ValueError):
        sc.tau0_map(7.0, 3.0, 3.0)
    assert sc.tau0_log(7.0, np.log(3.0), np.log(3.0 - 1.0)) == pytest.approx(
        sc.tau0_map(7.0, 1.0, 3.0), rel=1e-15)


@pytest.mark.parametrize("a", [0.3, 0.5, 0.7])
def test_thickness_manifold(a):
    m = sc.ScaleModel.from_setup(HomogeneitySetup(a))
    tau = 200.0
    for lx in np.linspace(0.2, 0.8, 4) * tau + sc.log_eps_tau(m, tau):
        t0, ale = sc.tau0_on_thickness(m, tau, lx)
        # the gap of the manifold reproduces t0 through tau0_log
        gap = (1 + a) * lx - a * tau - ale
        assert sc.tau0_log(tau, lx, gap) == pytest.approx(t0, rel=1e-12)
        assert abs(t0 - sc.tau0_bulk(a, tau, lx)) <= abs(ale) * (1 + 1e-12)


def test_mass_integral_matches_closed_form():
    for a in (0.3, 0.5, 0.7):
        m = sc.ScaleModel.from_setup(HomogeneitySetup(a))
        for tau in (1e2, 1e3, 1e4):
            assert sc.mass_integral(m, tau) == pytest.approx(sc.mass_integral_closed(m, tau),
                                                             rel=1e-11)


def test_mass_integral_improves_a05():
    m = sc.ScaleModel.from_setup(S05)
    d3 = abs(sc.mass_integral(m, 1e3) - 1)
    d4 = abs(sc.mass_integral(m, 1e4) - 1)
    assert d4 < d3 and d4 <= 5e-3


def test_mass_integral_a03_pinned():
    m = sc.ScaleModel.from_setup(HomogeneitySetup(0.3))
    v = sc.mass_integral(m, 1e4)
    assert abs(v - 1) <= 5e-3
    assert v == pytest.approx(1.001169, abs=1e-6)


def test_mass_integral_rejects_small_tau():
    m = sc.ScaleModel.from_setup(S05)
    with pytest.raises(ValueError):
        sc.mass_integral(m, 2.0)
