"""Scale laws lambda(tau) = C0/tau, eps(tau) and the characteristic time map."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from . import singquad as sq
from .kernels import HomogeneitySetup


def c0(setup: HomogeneitySetup, convention: str = "mass") -> float:
    """The constant C0 in lambda(tau) ~ C0/tau.

    convention="mass" (default) is the value for which the dyadic-scale mass
    integral tends to 1, namely 1/(2 log(1/(1-a))). convention="printed"
    returns 1/(2 a log(1/(1-a))), for which the same integral tends to 1/a.
    """
    a = setup.a
    L = -np.log1p(-a)
    if convention == "mass":
        return 1.0 / (2.0 * L)
    if convention == "printed":
        return 1.0 / (2.0 * a * L)
    raise ValueError("convention must be 'mass' or 'printed'")


@dataclass(frozen=True)
class ScaleModel:
    a: float
    c0: float

    @classmethod
    def from_setup(cls, setup: HomogeneitySetup, convention: str = "mass"):
        return cls(setup.a, c0(setup, convention))

    @property
    def setup(self):
        return HomogeneitySetup(self.a)


def lambda_tau(model: ScaleModel, tau):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("lambda(tau) needs tau > 0")
    return model.c0 / tau


def log_eps_tau(model: ScaleModel, tau):
    """log eps(tau) = (1/a) log(a lambda((1-a) tau))."""
    a = model.a
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("eps(tau) needs tau > 0")
    return np.log(a * model.c0 / ((1.0 - a) * tau)) / a


def eps_tau(model: ScaleModel, tau):
    return np.exp(log_eps_tau(model, tau))


def delay_residual(model: ScaleModel, tau):
    """lambda(tau) - (1-a) lambda((1-a) tau); zero for lambda = C0/tau."""
    a = model.a
    return lambda_tau(model, tau) - (1.0 - a) * lambda_tau(model, (1.0 - a) * tau)


def delay_residual_exact(model: ScaleModel, tau) -> Fraction:
    """The delay residual in exact rational arithmetic on the float inputs.

    lambda(tau) = C0/tau is a rational function, so the residual is exactly
    representable; floating division alone leaves up to one ulp.
    """
    c, t, b = Fraction(float(model.c0)), Fraction(float(tau)), Fraction(1.0 - model.a)
    if t <= 0:
        raise ValueError("lambda(tau) needs tau > 0")
    return c / t - b * (c / (b * t))


def tau0_map(tau, xi1, xi2):
    """tau0 = tau - log(xi2/(xi2 - xi1)), for 0 <= xi1 < xi2."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    if np.any(xi1 < 0) or np.any(xi1 >= xi2):
        raise ValueError("tau0_map needs 0 <= xi1 < xi2")
    return tau - (np.log(xi2) - np.log(xi2 - xi1))


def tau0_log(tau, log_xi2, log_gap):
    """tau0 from log xi2 and log(xi2 - xi1); usable when xi1, xi2 overflow."""
    log_xi2 = np.asarray(log_xi2, dtype=float)
    log_gap = np.asarray(log_gap, dtype=float)
    if np.any(log_gap > log_xi2):
        raise ValueError("need xi2 - xi1 <= xi2")
    return tau - (log_xi2 - log_gap)


def tau0_collision(a, tau):
    """tau0 ~ (1-a) tau in the collision region."""
    return (1.0 - a) * tau


def tau0_bulk(a, tau, log_xi2):
    """tau0 ~ (1-a) tau + a log xi2 away from the collision region."""
    return (1.0 - a) * tau + a * np.asarray(log_xi2, dtype=float)


def tau0_on_thickness(model: ScaleModel, tau, log_xi2):
    """tau0 on the manifold xi2 - xi1 = xi2^(1+a) e^(-a tau) / eps(tau0)^a.

    Solves tau0 = (1-a) tau + a log xi2 - a log eps(tau0) and returns
    (tau0, a log eps(tau0)).
    """
    a = model.a
    base = tau0_bulk(a, tau, log_xi2)

    def resid(t0):
        return t0 - base + a * log_eps_tau(model, t0)

    lo = max(1e-12, 0.5 * base) if base > 0 else 1e-12
    hi = max(2.0 * abs(base), 10.0) + 100.0
    t0 = brentq(resid, lo, hi, xtol=1e-13, rtol=1e-15)
    return t0, a * float(log_eps_tau(model, t0))


def mass_integral(model: ScaleModel, tau: float, rel_tol: float = 1e-12) -> float:
    """2a int_{eps}^{eps e^tau} lambda((1-a) tau + a log xi2) dxi2/xi2.

    Integrated in w = log xi2 by quadrature of the exact integrand.
    """
    a = model.a
    le = float(log_eps_tau(model, tau))
    if (1.0 - a) * tau + a * le <= 0:
        raise ValueError("tau too small: the lower end of the range has tau0 <= 0")

    def f(w):
        return 2.0 * a * model.c0 / ((1.0 - a) * tau + a * w)

    return sq.integrate_finite(f, le, le + tau, rel_tol=rel_tol).value


def mass_integral_closed(model: ScaleModel, tau: float) -> float:
    """Closed form of mass_integral: 2 C0 log((tau + a log eps)/((1-a) tau + a log eps))."""
    a = model.a
    le = float(log_eps_tau(model, tau))
    return 2.0 * model.c0 * np.log((tau + a * le) / ((1.0 - a) * tau + a * le))
