import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from shearasym import singquad as sq


def test_inverse_sqrt_at_left_endpoint():
    r = sq.integrate_finite(lambda x: x**-0.5, 0.0, 1.0, [sq.SingularitySpec(0.0, 0.5, "left")])
    assert r.value == pytest.approx(2.0, rel=1e-12)
    assert r.error_estimate >= 0 and r.evaluations >= 1


def test_two_endpoint_singularities_give_pi():
    f = lambda x: 1.0 / np.sqrt((1.0 - x) * (x - 0.3))
    r = sq.integrate_finite(f, 0.3, 1.0, [sq.SingularitySpec(0.3, 0.5, "left"),
                                          sq.SingularitySpec(1.0, 0.5, "right")])
    assert r.value == pytest.approx(np.pi, rel=1e-12)


def test_interior_singularity():
    r = sq.integrate_finite(lambda x: np.abs(x - 0.5) ** -0.7, 0.0, 1.0,
                            [sq.SingularitySpec(0.5, 0.7)])
    assert r.value == pytest.approx((2 / 0.3) * 0.5**0.3, rel=1e-11)


def test_semi_infinite_examples():
    r = sq.integrate_semi_infinite(lambda x: x * np.exp(-x), 0.0, sq.Exponential(1.0))
    assert r.value == pytest.approx(1.0, rel=1e-11)
    r = sq.integrate_semi_infinite(lambda x: x**-2.0, 1.0, sq.Algebraic(2.0))
    assert r.value == pytest.approx(1.0, rel=1e-11)
    r = sq.integrate_semi_infinite(lambda x: np.exp(-x) / np.sqrt(x), 0.0, sq.Exponential(1.0),
                                   [sq.SingularitySpec(0.0, 0.5, "left")])
    assert r.value == pytest.approx(np.sqrt(np.pi), rel=1e-11)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        sq.SingularitySpec(0.0, 1.0)
    with pytest.raises(ValueError):
        sq.SingularitySpec(0.0, 0.5, "middle")
    with pytest.raises(ValueError):
        sq.Algebraic(1.0)
    with pytest.raises(ValueError):
        sq.Exponential(0.0)
    with pytest.raises(ValueError):
        sq.integrate_finite(np.sin, 1.0, 1.0)
    with pytest.raises(ValueError):
        sq.integrate_finite(np.sin, 0.0, 1.0, rel_tol=0.0)


def test_nan_integrand_raises():
    with pytest.raises(sq.QuadratureError):
        sq.integrate_finite(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_gk21_is_exact_for_polynomials():
    v, _ = sq.gk21(lambda x: x**20, 0.0, 1.0)[:2]
    assert v == pytest.approx(1.0 / 21.0, rel=1e-14)


# error honesty: true error <= 10 x the reported estimate

@settings(max_examples=40, deadline=None)
@given(p=st.floats(0.05, 0.95), c=st.floats(0.1, 0.9))
def test_interior_power_family(p, c):
    exact = (c ** (1 - p) + (1 - c) ** (1 - p)) / (1 - p)
    r = sq.integrate_finite(lambda x: np.abs(x - c) ** -p, 0.0, 1.0, [sq.SingularitySpec(c, p)])
    err = abs(r.value - exact)
    assert err <= max(1e-10 * exact, 10 * r.error_estimate, 1e-14)


@settings(max_examples=40, deadline=None)
@given(s=st.floats(-0.9, 3.0), k=st.floats(0.2, 5.0))
def test_gamma_family(s, k):
    exact = gamma(s + 1) / k ** (s + 1)
    sings = [sq.SingularitySpec(0.0, -s, "left")] if s < 0 else []
    r = sq.integrate_semi_infinite(lambda x: x**s * np.exp(-k * x), 0.0, sq.Exponential(k), sings)
    err = abs(r.value - exact)
    assert err <= max(1e-9 * exact, 10 * r.error_estimate, 1e-14)


@settings(max_examples=40, deadline=None)
@given(p=st.floats(1.2, 6.0), lo=st.floats(0.5, 50.0))
def test_algebraic_tail_family(p, lo):
    exact = lo ** (1 - p) / (p - 1)
    r = sq.integrate_semi_infinite(lambda x: x**-p, lo, sq.Algebraic(p))
    err = abs(r.value - exact)
    assert err <= max(1e-9 * exact, 10 * r.error_estimate, 1e-14)


@settings(max_examples=30, deadline=None)
@given(lo=st.floats(-3, 3), w=st.floats(0.1, 4), cut=st.floats(0.05, 0.95))
def test_additivity(lo, w, cut):
    f = lambda x: np.exp(np.sin(3 * x)) + x * x
    hi, mid = lo + w, lo + cut * w
    whole = sq.integrate_finite(f, lo, hi, rel_tol=1e-12).value
    parts = (sq.integrate_finite(f, lo, mid, rel_tol=1e-12).value
             + sq.integrate_finite(f, mid, hi, rel_tol=1e-12).value)
    assert whole == pytest.approx(parts, rel=1e-11)
