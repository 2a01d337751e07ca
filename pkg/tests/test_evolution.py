import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shearasym import evolution as evo
from shearasym import scales as sc

TAU = 1e3


@pytest.fixture(scope="module")
def sol(pipe05):
    return pipe05.solution


@pytest.fixture(scope="module")
def le(sol):
    return float(sc.log_eps_tau(sol.scales, TAU))


def test_flow_start():
    st0 = evo.CharacteristicState(0.5, 3.0, 2.5)
    assert evo.flow(st0, 3.0) == (0.0, 2.5)


@settings(max_examples=60, deadline=None)
@given(a=st.floats(0.05, 0.95), t0=st.floats(-20, 50), dt=st.floats(0, 40),
       lx=st.floats(-10, 10))
def test_ratio_identity(a, t0, dt, lx):
    s = evo.CharacteristicState(a, t0, float(np.exp(lx)))
    tau = t0 + dt
    d = tau - t0
    # exp(-dt/a) carries a rounding error of order eps dt/a
    assert evo.ratio_identity_defect(s, tau) <= 8 * np.finfo(float).eps * (1 + d / a)


def test_flow_long_time_limit():
    s = evo.CharacteristicState(0.5, 0.0, 1.0)
    x1, x2 = evo.flow(s, 200.0)
    assert x1 / x2 == pytest.approx(1.0, abs=1e-15)
    assert x1 < 1e-80 and x2 < 1e-80


def test_sigma_star_infinite_horizon(sol, le):
    for r in np.logspace(-1, 1, 5):
        v = evo.damping_sigma_star(sol, np.exp(le) * r, TAU, -np.inf)
        assert v == pytest.approx(sol.sigma.sigma(r), rel=1e-5)


def test_sigma_star_methods_agree(sol):
    ly = np.log(sol.sigma.scale) + np.array([-3.0, 0.0, 3.0])
    for h in (0.5, 5.0, np.inf):
        a = evo.log_sigma_star(sol, ly, h, "stationary")
        b = evo.log_sigma_star(sol, ly, h, "quadrature")
        assert np.allclose(a, b, rtol=1e-8, atol=1e-10)


def test_sigma_star_monotone_in_xi2(sol, le):
    r = sol.sigma.scale * np.logspace(-2, 2, 9)
    v = [evo.damping_sigma_star(sol, np.exp(le) * x, TAU, TAU - 3.0) for x in r]
    assert np.all(np.diff(v) > 0)
    assert all(0 < x <= 1 for x in v)


def test_sigma_star_tends_to_one(sol, le):
    r = 1e3 * sol.sigma.scale
    assert evo.damping_sigma_star(sol, np.exp(le) * r, TAU, -np.inf) >= 1 - 1e-4


def test_G_and_F_nonnegative(sol, le):
    rows = evo.sample_G(sol, TAU, le + np.linspace(0, TAU, 9), np.logspace(-4, 4, 9))
    assert len(rows) > 0 and np.all(np.isfinite(rows))
    w, v = rows[:, 0], rows[:, 1]
    for t in (0.0, 1.0, 10.0):
        lf = evo.log_F(sol, w, v, t, TAU)
        assert np.all(np.exp(lf) >= 0) and not np.any(np.isnan(lf))


def test_G_zero_outside_construction(sol):
    # a gap below xi2 e^{1 - tau} means tau0 < 1
    assert evo.log_G(sol, 0.0, -TAU + 0.5, TAU) == -np.inf
    assert evo.evaluate_G(sol, 1.0 - np.exp(-9.5), 1.0, 10.0) == 0.0


def test_G_xi1_collapse(sol, le):
    for f in (0.3, 0.5, 0.7):
        w = le + f * TAU
        full = evo.G_xi1_marginal(sol, w, TAU)
        coll = np.exp(evo.log_G_collapsed_weight(sol, w, TAU))
        assert full == pytest.approx(coll, rel=2e-2)


def test_G_support(sol):
    assert evo.G_support_fraction(sol, TAU) <= 5e-2


def test_lorentzian_shape(sol, le):
    w = le + 0.4 * TAU
    vals = [evo.log_F_collapsed_weight(sol, w, t, TAU) + np.log1p(t * t)
            for t in (0.0, 0.3, 2.0, 50.0)]
    assert np.ptp(vals) <= 1e-3
    xi2 = np.exp(le + 20.0)
    a, b = (evo.evaluate_F_collapsed(sol, xi2, t * xi2, TAU) * (1 + t * t) for t in (0.0, 7.0))
    assert a == pytest.approx(b, rel=1e-3)


def test_lorentz_integral():
    assert evo.lorentz_integral() == pytest.approx(np.pi, rel=1e-10)


def test_marginal_check(sol, le):
    for f in (0.1, 0.5, 0.9):
        num, ana = evo.marginal_check_log(sol, le + f * TAU, TAU)
        assert num == pytest.approx(ana, rel=2e-2)
    n, g = evo.marginal_check(sol, np.exp(le + 5.0), TAU)
    assert n == pytest.approx(g, rel=2e-2)


def test_full_F_marginal_is_G(sol, le):
    w = le + 0.5 * TAU
    vp = evo._peak_gap(sol, w, TAU)
    for dv in (-4.0, 0.0, 2.0):
        assert evo.full_marginal_ratio(sol, w, vp + dv, TAU) == pytest.approx(1.0, abs=1e-6)


def test_dirac_width_scaling(sol, le):
    assert evo.dirac_width_exponent(sol, le + 0.5 * TAU, TAU, 2 * TAU) == pytest.approx(1.0,
                                                                                    abs=5e-2)
