import numpy as np
import pytest

from shearasym import profiles as prof
from shearasym.kernels import HomogeneitySetup

S05 = HomogeneitySetup(0.5)


@pytest.fixture(scope="module")
def P(pipe05):
    return pipe05.profiles


@pytest.fixture(scope="module")
def sig(pipe05):
    return pipe05.sigma


def _slope(fn, x, h=0.5):
    return (np.log(fn(x * np.exp(h))) - np.log(fn(x * np.exp(-h)))) / (2 * h)


def test_omega_small_limit(sig):
    z = 1e-3 * np.exp(sig.xi_grid[0])
    c2 = prof.omega_small_limit(S05, sig)
    assert prof.omega(S05, sig, z) == pytest.approx(c2, rel=1e-2)


def test_omega_small_limit_needs_beta_above_half(pipelines):
    with pytest.raises(ValueError):
        prof.omega_small_limit(HomogeneitySetup(0.3), pipelines(0.3).sigma)


def test_omega_large_drift_shrinks(sig):
    """The large-argument approach is slow but monotone: the spread per two decades shrinks."""
    s = sig.scale
    g = lambda z: 0.5 * z * prof.omega(S05, sig, z) - np.log(z)
    spreads = [abs(g(s * 10.0 ** (k + 2)) - g(s * 10.0**k)) for k in (2, 4, 6, 8)]
    assert all(b < a for a, b in zip(spreads, spreads[1:]))


def test_omega_curve_matches_direct(P, sig):
    for z in sig.scale * np.logspace(-6, 5, 7):
        assert P.omega(z) == pytest.approx(prof.omega(S05, sig, z), rel=1e-6)


def test_w_large_r_bound(P, sig):
    r = sig.scale * np.logspace(2, 5, 7)
    q = r**1.5 * P.w(r) / np.log(r)
    assert np.all(q > 0) and q.max() / q.min() < 2.0


def test_w_small_r_slope(P):
    r = P.w.x[0] * 10.0
    sl = _slope(lambda x: prof.w_profile(S05, P.omega, x), r)
    assert sl == pytest.approx(-0.5, abs=5e-2)


def test_w_integral(P):
    target = 2**0.5 * 0.5 / (4 * np.sqrt(2) * np.pi * 0.5)
    assert P.w.integral() == pytest.approx(target, rel=1e-2)


def test_w0_value(P):
    assert prof.w0(S05, P.w_tilde) == pytest.approx(0.1591549, rel=1e-2)


def test_w_tilde_change_of_variables(P):
    lhs = prof.w0(S05, P.w_tilde)
    rhs = prof.wtilde_constant(0.5) * 0.5 * P.w.integral()
    assert lhs == pytest.approx(rhs, rel=1e-3)


def test_w_tilde_log_growth(P):
    q6 = prof.w_tilde(S05, P.w, 1e-6) / np.log(1e6)
    q10 = prof.w_tilde(S05, P.w, 1e-10) / np.log(1e10)
    assert 0.5 < q10 / q6 < 2.0


def test_hbar_two_routes(P, sig):
    for z in sig.scale * np.logspace(-3, 5, 9):
        a = prof.hbar_from_omega(S05, P.omega, z)
        b = prof.hbar_from_w(S05, P.w, z)
        assert a == pytest.approx(b, rel=1e-3)


def test_hbar_normalisation(P):
    assert P.hbar.integral(1.0) == pytest.approx(1.0, abs=1e-2)


def test_u_integral_and_substitution(P):
    u = P.u.integral()
    assert u == pytest.approx(0.5, abs=1.5e-2)
    assert u == pytest.approx(0.5 * P.hbar.integral(1.0), rel=1e-3)


def test_nonnegative_everywhere(P):
    x = np.logspace(-30, 30, 241)
    for c in P.curves().values():
        v = c(x)
        assert np.all(np.isfinite(v)) and np.all(v >= 0)


def test_tails_continuous(P):
    for name, c in P.curves().items():
        assert c.tail_mismatch() <= 1e-4, name


def test_left_exponents():
    assert prof.omega_left_exponent(0.76) == 0.0
    assert prof.omega_left_exponent(0.4) == pytest.approx(-0.2)
    assert prof.w_left_exponent(0.5, 0.76) == -0.5


def test_divergent_integral_raises(P):
    with pytest.raises(ValueError):
        P.omega.integral()


def test_curve_csv(P, tmp_path):
    p = tmp_path / "u.csv"
    P.u.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "x,U"
    assert len(lines) == len(P.u.x) + 1
    assert (tmp_path / "u.csv.json").exists()


def test_curve_rejects_bad_values():
    t = prof.TailModel(-1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        prof.ProfileCurve("X", [1.0, 2.0], [1.0, -1.0], t, t)
    with pytest.raises(ValueError):
        prof.ProfileCurve("X", [2.0, 1.0], [1.0, 1.0], t, t)
