"""Mass balance of the reduced gain and loss operators on factorized test densities."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import singquad as sq
from .kernels import HomogeneitySetup, phi_table

SQRT2 = np.sqrt(2.0)
PHI_INTEGRAL = SQRT2 * np.pi


@dataclass(frozen=True)
class Density1D:
    """A nonnegative density that is negligible outside center +- radius."""

    fn: Callable
    center: float
    radius: float

    def __call__(self, x):
        return self.fn(x)

    def integral(self, rel_tol: float = 1e-12) -> float:
        return sq.integrate_finite(self.fn, self.center - self.radius, self.center + self.radius,
                                   rel_tol=rel_tol).value


def gaussian(mu: float = 0.0, s: float = 1.0, amp: float = 1.0) -> Density1D:
    """amp * exp(-(x - mu)^2 / (2 s^2)), cut at 12 s where it is below 1e-31."""
    if s <= 0 or amp <= 0:
        raise ValueError("need s > 0 and amp > 0")
    return Density1D(lambda x: amp * np.exp(-0.5 * ((np.asarray(x) - mu) / s) ** 2), mu, 12.0 * s)


@dataclass(frozen=True)
class TestDensity:
    """G(xi1, xi2) = g1(xi1) g2(xi2)."""

    g1: Density1D
    g2: Density1D

    def __post_init__(self):
        if not (self.g1.integral() > 0 and self.g2.integral() > 0):
            raise ValueError("test densities must have positive mass")

    def shifted(self, d: float) -> "TestDensity":
        f = self.g1.fn
        return TestDensity(Density1D(lambda x: f(np.asarray(x) - d), self.g1.center + d,
                                     self.g1.radius), self.g2)

    def scaled(self, c: float) -> "TestDensity":
        f = self.g1.fn
        return TestDensity(Density1D(lambda x: c * f(x), self.g1.center, self.g1.radius), self.g2)


def gaussian_pair(mu1=0.0, s1=1.0, mu2=0.0, s2=1.0) -> TestDensity:
    return TestDensity(gaussian(mu1, s1), gaussian(mu2, s2))


def phi_inner(tz: float, rel_tol: float = 1e-12) -> float:
    """int_0^{tz} Phi(xi/(tz)) dxi by quadrature in xi."""
    phi = phi_table()
    f = lambda x: phi(np.clip(x / tz, 1e-300, 1.0 - 1e-16))
    return sq.integrate_finite(f, 0.0, tz, rel_tol=rel_tol).value


@lru_cache(maxsize=None)
def phi_unit_integral(rel_tol: float = 1e-12) -> float:
    """int_0^1 Phi(s) ds by quadrature; the xi2 integral is tz times this."""
    phi = phi_table()
    f = lambda s: phi(np.clip(s, 1e-300, 1.0 - 1e-16))
    return sq.integrate_finite(f, 0.0, 1.0, rel_tol=rel_tol).value


def reduced_gain_mass(setup: HomogeneitySetup, test: TestDensity, t: float,
                      use_phi_identity: bool = True, rel_tol: float = 1e-10) -> float:
    """Mass of the reduced gain term,

    (16 sqrt2 / (2^a t)) (int g2)^2 int dx1 int_0^inf dz g1(x1+z) g1(x1-z) z^-(a+1)
        * int_0^{tz} Phi(xi2/(tz)) dxi2,

    where the xi2 range was folded to (0, tz) by symmetry. With the identity
    the last factor is sqrt2 pi t z; otherwise the xi2 integral is done by
    quadrature (once, in s = xi2/(tz)).
    """
    if t <= 0:
        raise ValueError("t must be positive")
    a = setup.a
    g1 = test.g1
    m2 = test.g2.integral()
    c, R = g1.center, g1.radius

    # z^-(a+1) times the xi2 integral t z I1, with I1 = int_0^1 Phi
    i1 = PHI_INTEGRAL if use_phi_identity else phi_unit_integral()

    def inner(x1):
        zmax = R - abs(x1 - c)
        if zmax <= 0:
            return 0.0
        f = lambda z: g1(x1 + z) * g1(x1 - z) * i1 * t * np.asarray(z) ** (-a)
        return sq.integrate_finite(f, 0.0, zmax, sings=[sq.SingularitySpec(0.0, a)],
                                   rel_tol=1e-2 * rel_tol).value

    outer = sq.integrate_finite(np.vectorize(inner), c - R, c + R, rel_tol=rel_tol).value
    return 16.0 * SQRT2 / (2.0**a * t) * m2 * m2 * outer


def reduced_loss_mass(setup: HomogeneitySetup, test: TestDensity, rel_tol: float = 1e-10) -> float:
    """8 pi (int g2)^2 int int |alpha - beta|^-a g1(alpha) g1(beta) dalpha dbeta."""
    a = setup.a
    g1 = test.g1
    m2 = test.g2.integral()
    lo, hi = g1.center - g1.radius, g1.center + g1.radius

    def inner(al):
        f = lambda b: np.abs(al - b) ** (-a) * g1(b)
        return g1(al) * sq.integrate_finite(f, lo, hi, sings=[sq.SingularitySpec(al, a)],
                                            rel_tol=1e-2 * rel_tol).value

    outer = sq.integrate_finite(np.vectorize(inner), lo, hi, rel_tol=rel_tol).value
    return 8.0 * np.pi * m2 * m2 * outer


def angular_integral(upper: float = np.pi / 2, rel_tol: float = 1e-13) -> float:
    """int_0^upper (sin(psi/2) + cos(psi/2)) dpsi by quadrature."""
    f = lambda p: np.sin(0.5 * p) + np.cos(0.5 * p)
    return sq.integrate_finite(f, 0.0, upper, rel_tol=rel_tol).value


def angular_closed(upper: float) -> float:
    return 2.0 * (1.0 - np.cos(0.5 * upper)) + 2.0 * np.sin(0.5 * upper)


def f_gain_angular_identity() -> float:
    """int_0^{pi/2} (sin(psi/2) + cos(psi/2)) dpsi; equal to 2."""
    return angular_integral(np.pi / 2)
