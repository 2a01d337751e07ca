"""Characteristics and the asymptotic distributions G and F.

At tau of order 10^3 the relevant xi2 range runs from eps(tau) ~ e^-10 up to
eps(tau) e^tau ~ e^990, so every evaluator works with log xi2 and with
log(xi2 - xi1), the log gap, and returns logarithms where the values would
overflow. Plain-float wrappers are provided for moderate arguments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import singquad as sq
from .cutoff import damping_exponent
from .kernels import HomogeneitySetup
from .profiles import ProfileSet, build_profiles
from .scales import ScaleModel, lambda_tau, log_eps_tau, tau0_log

LN10 = np.log(10.0)


# ---------------------------------------------------------------------------
# characteristics

@dataclass(frozen=True)
class CharacteristicState:
    """Launch data (tau0, xi2_0) on the boundary xi1 = 0."""

    a: float
    tau0: float
    xi2_0: float

    def __post_init__(self):
        if not 0.0 < self.a < 1.0:
            raise ValueError("a must lie in (0, 1)")
        if not self.xi2_0 > 0:
            raise ValueError("xi2_0 must be positive")


def log_flow(state: CharacteristicState, tau: float):
    """(log xi1, log xi2) at time tau; log xi1 = -inf at tau = tau0."""
    d = tau - state.tau0
    if d < 0:
        raise ValueError("flow needs tau >= tau0")
    a = state.a
    l0 = np.log(state.xi2_0)
    lx2 = l0 - (1.0 / a - 1.0) * d
    if d == 0:
        return -np.inf, lx2
    # log(e^d - 1), without overflow for large d
    lem1 = d + np.log(-np.expm1(-d)) if d > 1.0 else np.log(np.expm1(d))
    return l0 - d / a + lem1, lx2


def flow(state: CharacteristicState, tau: float):
    """(xi1, xi2) at time tau along the characteristic launched from state."""
    l1, l2 = log_flow(state, tau)
    return float(np.exp(l1)), float(np.exp(l2))


def ratio_identity_defect(state: CharacteristicState, tau: float) -> float:
    """|xi1/xi2 - (1 - e^{-(tau - tau0)})|."""
    xi1, xi2 = flow(state, tau)
    return abs(xi1 / xi2 + np.expm1(-(tau - state.tau0)))


# ---------------------------------------------------------------------------
# assembled solution

@dataclass
class AsymptoticSolution:
    """Everything needed to evaluate G and F at a given a.

    damping selects how sigma* is computed inside G and F: "stationary" uses
    the closed form sigma(y)/sigma(y e^{kh}) implied by the stationary
    equation, "quadrature" integrates Lambda along the characteristic.
    """

    setup: HomogeneitySetup
    scales: ScaleModel
    sigma: object
    profiles: ProfileSet
    damping: str = "stationary"
    sharp_cutoff: bool = False
    ramp_width: float = 0.25 * LN10
    min_tau0: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def a(self):
        return self.setup.a


def build_solution(setup: HomogeneitySetup, sigma, profiles: Optional[ProfileSet] = None,
                   convention: str = "mass", **kw) -> AsymptoticSolution:
    if profiles is None:
        profiles = build_profiles(setup, sigma)
    return AsymptoticSolution(setup, ScaleModel.from_setup(setup, convention), sigma, profiles,
                              **kw)


# ---------------------------------------------------------------------------
# damping factor

def log_sigma_star(sol: AsymptoticSolution, log_y, horizon, method: Optional[str] = None):
    """log of exp(-int_0^h Lambda(y e^{(1/a-1)u}) du), y = e^log_y.

    The stationary form is log sigma(y) - log sigma(y e^{kh}).
    """
    method = method or sol.damping
    k = sol.setup.drift
    log_y = np.asarray(log_y, dtype=float)
    horizon = np.asarray(horizon, dtype=float)
    if method == "stationary":
        far = np.where(np.isinf(horizon), 0.0,
                       sol.sigma.log_sigma(log_y + k * np.where(np.isinf(horizon), 0.0, horizon)))
        return sol.sigma.log_sigma(log_y) - far
    if method == "quadrature":
        fn = np.vectorize(lambda ly, h: -damping_exponent(sol.setup, sol.sigma, float(np.exp(ly)),
                                                          horizon=float(h)))
        return fn(log_y, horizon)
    raise ValueError("method must be 'stationary' or 'quadrature'")


def damping_sigma_star(sol: AsymptoticSolution, xi2: float, tau: float, tau0: float,
                       method: str = "quadrature") -> float:
    """exp(-int_0^{tau - tau0} Lambda(e^{(1/a-1)u} xi2/eps(tau)) du), eps frozen at tau.

    tau0 = -inf gives the infinite-horizon value.
    """
    if tau < tau0:
        raise ValueError("damping needs tau >= tau0")
    ly = np.log(xi2) - log_eps_tau(sol.scales, tau)
    return float(np.exp(log_sigma_star(sol, ly, tau - tau0, method)))


def log_ramp(sol: AsymptoticSolution, log_xi2, tau):
    """log of the cutoff at xi2 = eps(tau) e^tau, a tanh ramp over half a decade."""
    edge = log_eps_tau(sol.scales, tau) + tau
    z = np.asarray(log_xi2, dtype=float) - edge
    if sol.sharp_cutoff:
        return np.where(z <= 0.0, 0.0, -np.inf)
    # log(0.5 (1 - tanh(z/w))) = -log(1 + e^{2z/w})
    return -np.logaddexp(0.0, 2.0 * z / sol.ramp_width)


# ---------------------------------------------------------------------------
# G

def _tau0(sol, tau, log_xi2, log_gap):
    return tau0_log(tau, log_xi2, log_gap)


def log_G(sol: AsymptoticSolution, log_xi2, log_gap, tau: float):
    """log G for the full form with U, in terms of log xi2 and log(xi2 - xi1).

    G = lambda(tau0) A xi2^-(2+a) U(A (xi2 - xi1)/xi2^(1+a)) Sigma,
    A = e^{a tau} eps(tau0)^a, Sigma = sigma* along the characteristic.
    Points with tau0 < min_tau0 are outside the asymptotic construction and
    return -inf.
    """
    a = sol.a
    w = np.asarray(log_xi2, dtype=float)
    v = np.asarray(log_gap, dtype=float)
    t0 = _tau0(sol, tau, w, v)
    ok = t0 >= sol.min_tau0
    t0s = np.where(ok, t0, sol.min_tau0)
    logA = a * tau + a * log_eps_tau(sol.scales, t0s)
    lz = logA + v - (1.0 + a) * w
    lu = sol.profiles.u.log_eval(lz)
    lsig = log_sigma_star(sol, w - log_eps_tau(sol.scales, tau), w - v)
    out = np.log(lambda_tau(sol.scales, t0s)) + logA - (2.0 + a) * w + lu + lsig
    return np.where(ok, out, -np.inf)


def evaluate_G(sol: AsymptoticSolution, xi1: float, xi2: float, tau: float) -> float:
    if not 0.0 <= xi1 < xi2:
        raise ValueError("evaluate_G needs 0 <= xi1 < xi2")
    return float(np.exp(log_G(sol, np.log(xi2), np.log(xi2 - xi1), tau)))


def tau0_bulk_log(sol, log_xi2, tau):
    return (1.0 - sol.a) * tau + sol.a * np.asarray(log_xi2, dtype=float)


def log_G_collapsed_weight(sol: AsymptoticSolution, log_xi2, tau: float):
    """log of xi2 times the delta(xi2 - xi1) weight:
    a lambda((1-a) tau + a log xi2) sigma(xi2/eps(tau)) ramp."""
    w = np.asarray(log_xi2, dtype=float)
    tb = tau0_bulk_log(sol, w, tau)
    if np.any(tb <= 0):
        raise ValueError("bulk tau0 must be positive")
    ly = w - log_eps_tau(sol.scales, tau)
    return (np.log(sol.a * lambda_tau(sol.scales, tb)) + sol.sigma.log_sigma(ly)
            + log_ramp(sol, w, tau))


def evaluate_G_collapsed(sol: AsymptoticSolution, xi2: float, tau: float) -> float:
    """Weight of delta(xi2 - xi1) in the collapsed G."""
    w = np.log(xi2)
    return float(np.exp(log_G_collapsed_weight(sol, w, tau) - w))


def _peak_gap(sol, w, tau):
    """log gap where the U argument is near one, with tau0 taken in bulk."""
    a = sol.a
    tb = max(tau0_bulk_log(sol, w, tau), sol.min_tau0)
    return (1.0 + a) * w - a * tau - a * float(log_eps_tau(sol.scales, tb))


def _gap_integrand(sol, w, tau):
    """v -> lambda(tau0) zeta_U U(zeta_U) Sigma, the xi1 mass density per unit log gap
    multiplied by xi2."""
    a = sol.a
    ly = w - float(log_eps_tau(sol.scales, tau))

    def f(v):
        v = np.asarray(v, dtype=float)
        t0 = tau - w + v
        ok = t0 >= sol.min_tau0
        t0s = np.where(ok, t0, sol.min_tau0)
        lz = a * tau + a * log_eps_tau(sol.scales, t0s) + v - (1.0 + a) * w
        val = np.exp(np.log(lambda_tau(sol.scales, t0s)) + lz + sol.profiles.u.log_eval(lz)
                     + log_sigma_star(sol, ly, w - v))
        return np.where(ok, val, 0.0)

    return f


def _gap_range(sol, w, tau):
    v_lo = w - tau + sol.min_tau0
    vp = _peak_gap(sol, w, tau)
    v_lo = max(v_lo, min(vp, w) - 60.0)
    return v_lo, vp, w


def G_xi1_marginal(sol: AsymptoticSolution, log_xi2: float, tau: float,
                   rel_tol: float = 1e-8, upper_gap: Optional[float] = None) -> float:
    """xi2 * int G dxi1 over 0 <= xi1 < xi2, computed in the log gap.

    With upper_gap the gap integral stops at log gap = upper_gap, which
    gives the mass with xi2 - xi1 below e^upper_gap.
    """
    w = float(log_xi2)
    f = _gap_integrand(sol, w, tau)
    v_lo, vp, v_hi = _gap_range(sol, w, tau)
    if upper_gap is not None:
        v_hi = min(v_hi, upper_gap)
    if v_hi <= v_lo:
        return 0.0
    cuts = [v_lo] + [c for c in (vp - 5.0, vp, vp + 5.0) if v_lo < c < v_hi] + [v_hi]
    return float(sum(sq.integrate_finite(f, l, r, rel_tol=rel_tol).value
                     for l, r in zip(cuts[:-1], cuts[1:])))


def _w_pieces(sol, tau, w_lo, w_hi):
    le = float(log_eps_tau(sol.scales, tau))
    ts = float(getattr(sol.sigma, "log_scale", 0.0))
    marks = sorted({le, le + ts, le + tau, le + tau - 5.0, le + ts + 10.0})
    cuts = [w_lo] + [m for m in marks if w_lo < m < w_hi] + [w_hi]
    # long stretches are split so each panel sees a smooth integrand
    out = []
    for l, r in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(np.ceil((r - l) / 50.0)))
        e = np.linspace(l, r, n + 1)
        out.extend(zip(e[:-1], e[1:]))
    return out


def G_mass(sol: AsymptoticSolution, tau: float, w_lo: Optional[float] = None,
           w_hi: Optional[float] = None, rel_tol: float = 1e-7) -> float:
    """2 int int G dxi1 dxi2 for the full form.

    The outer range defaults to xi2 in [eps(tau)/10, 10 eps(tau) e^tau].
    In log variables the integrand is 2 lambda(tau0) zeta_U U(zeta_U) Sigma.
    """
    le = float(log_eps_tau(sol.scales, tau))
    w_lo = le - LN10 if w_lo is None else w_lo
    w_hi = le + tau + LN10 if w_hi is None else w_hi
    inner = np.vectorize(lambda w: G_xi1_marginal(sol, w, tau, rel_tol=1e-2 * rel_tol))
    total = 0.0
    for l, r in _w_pieces(sol, tau, w_lo, w_hi):
        total += sq.integrate_finite(inner, l, r, rel_tol=rel_tol).value
    return 2.0 * total


def G_collapsed_mass(sol: AsymptoticSolution, tau: float, w_lo=None, w_hi=None,
                     rel_tol: float = 1e-9) -> float:
    le = float(log_eps_tau(sol.scales, tau))
    w_lo = le - LN10 if w_lo is None else w_lo
    w_hi = le + tau + LN10 if w_hi is None else w_hi
    f = lambda w: np.exp(log_G_collapsed_weight(sol, w, tau))
    return 2.0 * sum(sq.integrate_finite(f, l, r, rel_tol=rel_tol).value
                     for l, r in _w_pieces(sol, tau, w_lo, w_hi))


def G_support_fraction(sol: AsymptoticSolution, tau: float, rel_tol: float = 1e-7) -> float:
    """Fraction of the full-G mass with xi2 outside [eps(tau), eps(tau) e^tau]."""
    le = float(log_eps_tau(sol.scales, tau))
    inside = G_mass(sol, tau, le, le + tau, rel_tol)
    # the tails are integrated far enough out that the remainder is negligible
    below = G_mass(sol, tau, le - 30.0, le, rel_tol)
    above = G_mass(sol, tau, le + tau, le + tau + 30.0, rel_tol)
    return (below + above) / (inside + below + above)


def half_mass_log_width(sol: AsymptoticSolution, log_xi2: float, tau: float) -> float:
    """log of the xi1-width x with half of the U-bump mass at xi2 - xi1 < x.

    The bump has a logarithmic peak at xi1 = xi2, so a width at half maximum
    is not defined; the half-mass width has the same scaling.
    """
    total = G_xi1_marginal(sol, log_xi2, tau)
    v_lo, vp, v_hi = _gap_range(sol, log_xi2, tau)
    g = lambda v: G_xi1_marginal(sol, log_xi2, tau, upper_gap=v) - 0.5 * total
    return float(brentq(g, v_lo + 1e-9, v_hi, xtol=1e-10))


def dirac_width_exponent(sol: AsymptoticSolution, log_xi2: float, tau1: float,
                         tau2: float) -> float:
    """Measured d log(width) / d(-a tau) between tau1 and tau2; 1 for e^{-a tau} scaling."""
    l1 = half_mass_log_width(sol, log_xi2, tau1)
    l2 = half_mass_log_width(sol, log_xi2, tau2)
    return (l2 - l1) / (-sol.a * (tau2 - tau1))


# ---------------------------------------------------------------------------
# F

def log_F(sol: AsymptoticSolution, log_xi2, log_gap, t, tau: float):
    """log F for the full form with W~, with xi3 = t xi2.

    F = (a/(1-a)) lambda(tau0) A / (|xi~|^(a+2) xi2) W~(A (xi2 - xi1)/(xi2 |xi~|^a)) sigma*,
    |xi~| = xi2 sqrt(1 + t^2).
    """
    a = sol.a
    w = np.asarray(log_xi2, dtype=float)
    v = np.asarray(log_gap, dtype=float)
    t = np.asarray(t, dtype=float)
    t0 = _tau0(sol, tau, w, v)
    ok = t0 >= sol.min_tau0
    t0s = np.where(ok, t0, sol.min_tau0)
    logA = a * tau + a * log_eps_tau(sol.scales, t0s)
    lnorm = w + 0.5 * np.log1p(t * t)
    ls = logA + v - w - a * lnorm
    lwt = sol.profiles.w_tilde.log_eval(ls)
    lsig = log_sigma_star(sol, w - log_eps_tau(sol.scales, tau), w - v)
    out = (np.log(a / (1.0 - a)) + np.log(lambda_tau(sol.scales, t0s)) + logA
           - (a + 2.0) * lnorm - w + lwt + lsig)
    return np.where(ok, out, -np.inf)


def evaluate_F(sol: AsymptoticSolution, xi1: float, xi2: float, xi3: float, tau: float) -> float:
    if not 0.0 <= xi1 < xi2:
        raise ValueError("evaluate_F needs 0 <= xi1 < xi2")
    return float(np.exp(log_F(sol, np.log(xi2), np.log(xi2 - xi1), xi3 / xi2, tau)))


def log_F_collapsed_weight(sol: AsymptoticSolution, log_xi2, t, tau: float):
    """log of xi2^2 times the delta(xi2 - xi1) weight of the collapsed F:
    a lambda(tau0) sigma* ramp / (pi (1 + t^2)), tau0 in bulk."""
    w = np.asarray(log_xi2, dtype=float)
    t = np.asarray(t, dtype=float)
    tb = tau0_bulk_log(sol, w, tau)
    ly = w - log_eps_tau(sol.scales, tau)
    return (np.log(sol.a * lambda_tau(sol.scales, tb) / np.pi) - np.log1p(t * t)
            + sol.sigma.log_sigma(ly) + log_ramp(sol, w, tau))


def evaluate_F_collapsed(sol: AsymptoticSolution, xi2: float, xi3: float, tau: float) -> float:
    w = np.log(xi2)
    return float(np.exp(log_F_collapsed_weight(sol, w, xi3 / xi2, tau) - 2.0 * w))


def lorentz_integral(rel_tol: float = 1e-12) -> float:
    """int_R dt / (1 + t^2) by quadrature."""
    f = lambda t: 1.0 / (1.0 + t * t)
    head = sq.integrate_finite(f, 0.0, 1.0, rel_tol=rel_tol).value
    tail = sq.integrate_semi_infinite(f, 1.0, sq.Algebraic(2.0), rel_tol=rel_tol).value
    return 2.0 * (head + tail)


def marginal_check_log(sol: AsymptoticSolution, log_xi2: float, tau: float,
                       rel_tol: float = 1e-10):
    """(xi2 int F_collapsed dxi3 by quadrature, xi2 G_collapsed weight).

    Both members carry a factor xi2 so that they stay representable for
    xi2 up to eps(tau) e^tau.
    """
    w = float(log_xi2)
    f = lambda t: np.exp(log_F_collapsed_weight(sol, w, t, tau))
    head = sq.integrate_finite(f, 0.0, 1.0, rel_tol=rel_tol).value
    tail = sq.integrate_semi_infinite(f, 1.0, sq.Algebraic(2.0), rel_tol=rel_tol).value
    numeric = 2.0 * (head + tail)
    analytic = float(np.exp(log_G_collapsed_weight(sol, w, tau)))
    return numeric, analytic


def marginal_check(sol: AsymptoticSolution, xi2: float, tau: float):
    """(int F_collapsed dxi3, G_collapsed weight) at xi2."""
    n, g = marginal_check_log(sol, np.log(xi2), tau)
    return n / xi2, g / xi2


def full_marginal_ratio(sol: AsymptoticSolution, log_xi2: float, log_gap: float, tau: float,
                        rel_tol: float = 1e-9) -> float:
    """int_R F_full dxi3 / G_full at the same (xi1, xi2); exactly 1 in the construction.

    With xi3 = xi2 sinh(u) the xi3 integral is xi2 int cosh(u) F du.
    """
    w, v = float(log_xi2), float(log_gap)
    lg = float(log_G(sol, w, v, tau))
    if not np.isfinite(lg):
        raise ValueError("G vanishes at this point")
    a = sol.a

    def f(u):
        u = np.asarray(u, dtype=float)
        return np.exp(log_F(sol, w, v, np.sinh(u), tau) + w + np.log(np.cosh(u)) - lg)

    # the integrand decays like e^{-(a+1) u} once W~ has left its log plateau
    t0 = tau - w + v
    logA = a * tau + a * float(log_eps_tau(sol.scales, max(t0, sol.min_tau0)))
    lz = logA + v - (1.0 + a) * w
    uc = max(0.0, lz / a) + 5.0
    head = sq.integrate_finite(f, 0.0, uc, rel_tol=rel_tol).value
    tail = sq.integrate_semi_infinite(lambda d: f(uc + d), 0.0, sq.Exponential(0.5 * a),
                                      rel_tol=rel_tol).value
    return 2.0 * (head + tail)


# ---------------------------------------------------------------------------
# sampling for the CLI

def sample_G(sol: AsymptoticSolution, tau: float, log_xi2, zeta_u):
    """Rows (log xi2, log gap, log G) on a tensor grid of log xi2 and U arguments."""
    a = sol.a
    rows = []
    for w in np.atleast_1d(log_xi2):
        tb = max(tau0_bulk_log(sol, w, tau), sol.min_tau0)
        logA = a * tau + a * float(log_eps_tau(sol.scales, tb))
        for z in np.atleast_1d(zeta_u):
            v = np.log(z) - logA + (1.0 + a) * w
            if v >= w:
                continue
            rows.append((w, v, float(log_G(sol, w, v, tau))))
    return np.array(rows)
