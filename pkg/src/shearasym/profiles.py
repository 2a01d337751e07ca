"""Derived profiles Omega, W, W~, H-bar and U built from a converged sigma.

Every curve is sampled on a log-spaced grid and interpolated by a
monotonicity-filtered cubic Hermite rule in (log x, log value). Outside the
grid each curve follows a tail model x^p (c0 + c1 log x) whose exponent p is
fixed by the asymptotic regime and whose coefficients are fitted at the edge.
Integrals over curves are computed in the log variable, where every tail
decays exponentially.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from . import singquad as sq
from .io import write_csv, write_json
from .kernels import HomogeneitySetup, phi_table

SQRT2 = np.sqrt(2.0)


def hbar_constant(a: float) -> float:
    """(8 sqrt2 / 2^a) * a/(1-a), the prefactor of H-bar."""
    return 8.0 * SQRT2 / 2.0**a * a / (1.0 - a)


def wtilde_constant(a: float) -> float:
    return 4.0 * SQRT2 / 2.0**a


# ---------------------------------------------------------------------------
# curve type

@dataclass(frozen=True)
class TailModel:
    """value = x^p (c0 + c1 log x)."""

    p: float
    c0: float
    c1: float = 0.0

    def __call__(self, x):
        lx = np.log(x)
        return np.exp(self.p * lx) * (self.c0 + self.c1 * lx)

    def log_value(self, lx):
        with np.errstate(invalid="ignore", divide="ignore"):
            return self.p * lx + np.log(np.maximum(self.c0 + self.c1 * lx, 1e-300))

    def as_dict(self):
        return {"p": self.p, "c0": self.c0, "c1": self.c1}


def fit_tail(lx, lv, p, with_log, edge):
    """Fit c0 (and c1) of x^p (c0 + c1 log x) to edge points, matching the edge exactly.

    lx, lv are log abscissae and log values of the points used (edge point
    included); edge is the index of the edge point within them.
    """
    r = np.exp(lv - p * lx)
    if with_log and len(lx) >= 2:
        c1 = float(np.polyfit(lx, r, 1)[0])
    else:
        c1 = 0.0
    c0 = float(r[edge] - c1 * lx[edge])
    return TailModel(float(p), c0, c1)


def _hyman_slopes(X, Y):
    d = CubicSpline(X, Y).derivative()(X)
    delta = np.diff(Y) / np.diff(X)
    n = len(X)
    for i in range(n):
        left = delta[i - 1] if i > 0 else delta[0]
        right = delta[i] if i < n - 1 else delta[-1]
        if left * right > 0:
            if d[i] * right <= 0:
                d[i] = 0.0
            else:
                cap = 3.0 * min(abs(left), abs(right))
                if abs(d[i]) > cap:
                    d[i] = np.sign(d[i]) * cap
    return d


class ProfileCurve:
    """A positive sampled curve with log-log Hermite interpolation and tails."""

    def __init__(self, kind: str, abscissae, values, left_tail: TailModel,
                 right_tail: TailModel, direct: Optional[Callable] = None, meta=None):
        x = np.asarray(abscissae, dtype=float)
        v = np.asarray(values, dtype=float)
        if not (np.all(np.diff(x) > 0) and np.all(x > 0)):
            raise ValueError("abscissae must be positive and increasing")
        if not (np.all(np.isfinite(v)) and np.all(v > 0)):
            raise ValueError(f"{kind}: values must be finite and positive")
        self.kind = kind
        self.x = x
        self.values = v
        self.X = np.log(x)
        self.Y = np.log(v)
        self.interp = CubicHermiteSpline(self.X, self.Y, _hyman_slopes(self.X, self.Y))
        self.left_tail = left_tail
        self.right_tail = right_tail
        self.direct = direct
        self.meta = dict(meta or {})

    def log_eval(self, lx):
        lx = np.asarray(lx, dtype=float)
        out = self.interp(np.clip(lx, self.X[0], self.X[-1]))
        left = lx < self.X[0]
        right = lx > self.X[-1]
        if np.any(left):
            out = np.where(left, self.left_tail.log_value(lx), out)
        if np.any(right):
            out = np.where(right, self.right_tail.log_value(lx), out)
        return out

    def __call__(self, x, direct: bool = False):
        x = np.asarray(x, dtype=float)
        if direct:
            if self.direct is None:
                raise ValueError("no direct evaluator attached")
            return np.vectorize(self.direct)(x)
        with np.errstate(divide="ignore"):
            return np.exp(self.log_eval(np.log(x)))

    def tail_mismatch(self) -> float:
        """Relative jump between the tail models and the edge values."""
        l = abs(self.left_tail(self.x[0]) / self.values[0] - 1.0)
        r = abs(self.right_tail(self.x[-1]) / self.values[-1] - 1.0)
        return float(max(l, r))

    def integral(self, power: float = 0.0, rel_tol: float = 1e-10, lo=None, hi=None) -> float:
        """int x^power v(x) dx over (lo, hi), default (0, inf), in the log variable."""
        m = power + 1.0
        X0, X1 = self.X[0], self.X[-1]
        a_l = self.left_tail.p + m
        a_r = -(self.right_tail.p + m)
        if lo is None and a_l <= 0:
            raise ValueError(f"{self.kind}: integral diverges at 0 (tail exponent {self.left_tail.p})")
        if hi is None and a_r <= 0:
            raise ValueError(f"{self.kind}: integral diverges at infinity")

        def f(t):
            return np.exp(m * t + self.log_eval(t))

        L = np.log(lo) if lo is not None else None
        H = np.log(hi) if hi is not None else None
        a0 = X0 if L is None else max(X0, L)
        b0 = X1 if H is None else min(X1, H)
        total = 0.0
        if b0 > a0:
            # piecewise over the grid keeps each panel smooth
            edges = np.linspace(a0, b0, max(2, int(np.ceil((b0 - a0) / 2.0)) + 1))
            for u, v in zip(edges[:-1], edges[1:]):
                total += sq.integrate_finite(f, u, v, rel_tol=rel_tol).value
        if L is None:
            total += sq.integrate_semi_infinite(lambda d: f(X0 - d), 0.0,
                                                sq.Exponential(0.5 * a_l), rel_tol=rel_tol).value
        elif L < X0:
            total += sq.integrate_finite(f, L, X0, rel_tol=rel_tol).value
        if H is None:
            total += sq.integrate_semi_infinite(lambda d: f(X1 + d), 0.0,
                                                sq.Exponential(0.5 * a_r), rel_tol=rel_tol).value
        elif H > X1:
            total += sq.integrate_finite(f, X1, H, rel_tol=rel_tol).value
        return total

    def tail_info(self) -> dict:
        return {"kind": self.kind, "left_tail": self.left_tail.as_dict(),
                "right_tail": self.right_tail.as_dict(), **self.meta}

    def to_csv(self, path):
        write_csv(path, ["x", self.kind], [self.x, self.values])
        write_json(str(path) + ".json", self.tail_info())


def _build_curve(kind, x, vals, p_left, log_left, p_right, log_right, direct=None, meta=None,
                 nfit=6):
    lx, lv = np.log(x), np.log(vals)
    left = fit_tail(lx[:nfit], lv[:nfit], p_left, log_left, 0)
    right = fit_tail(lx[-nfit:], lv[-nfit:], p_right, log_right, nfit - 1)
    return ProfileCurve(kind, x, vals, left, right, direct, meta)


# ---------------------------------------------------------------------------
# Omega

def omega(setup: HomogeneitySetup, sigma, zeta: float, rel_tol: float = 1e-10) -> float:
    """Omega(zeta) = int_R sigma(|e+z|) sigma(|e-z|) / (|e+z| |e-z|) de.

    With d = |eta - zeta| = e^t the near-diagonal factor sigma(d)/d becomes
    sigma(e^t) dt, which removes the |eta - zeta|^(beta - 1) singularity:

    Omega = 2 [ int_{-inf}^{log z} sigma(2z - e^t) sigma(e^t)/(2z - e^t) dt
              + int_R sigma(2z + e^t) sigma(e^t)/(2z + e^t) dt ].
    """
    beta = getattr(sigma, "beta_hat", np.nan)
    if not beta > 0:
        raise ValueError("Omega diverges unless the small-argument exponent of sigma is positive")
    zeta = float(zeta)
    lz = np.log(zeta)
    ts = getattr(sigma, "log_scale", 0.0)
    ls2 = np.log(2.0)

    def inner(t):
        # 2z - e^t = z (2 - e^{t - lz})
        u = np.exp(t - lz)
        lg = lz + np.log(2.0 - u)
        return np.exp(sigma.log_sigma(lg) + sigma.log_sigma(t) - lg)

    def outer(t):
        lg = lz + np.log(2.0 + np.exp(t - lz))
        return np.exp(sigma.log_sigma(lg) + sigma.log_sigma(t) - lg)

    rate_l = 0.5 * beta
    # first piece: t in (-inf, lz]
    t_a = min(lz, ts) - 2.0 / beta
    p1 = sq.integrate_finite(inner, t_a, lz, rel_tol=rel_tol).value
    p1 += sq.integrate_semi_infinite(lambda d: inner(t_a - d), 0.0, sq.Exponential(rate_l),
                                     rel_tol=rel_tol).value
    # second piece: t in R
    lo = min(lz, ts) - 2.0 / beta
    hi = max(lz + ls2, ts) + 4.0
    p2 = sq.integrate_finite(outer, lo, hi, rel_tol=rel_tol).value
    p2 += sq.integrate_semi_infinite(lambda d: outer(lo - d), 0.0, sq.Exponential(rate_l),
                                     rel_tol=rel_tol).value
    p2 += sq.integrate_semi_infinite(lambda d: outer(hi + d), 0.0, sq.Exponential(0.5),
                                     rel_tol=rel_tol).value
    return 2.0 * (p1 + p2)


def omega_small_limit(setup: HomogeneitySetup, sigma, rel_tol: float = 1e-10) -> float:
    """c2 = 2 int_0^inf sigma(x)^2 / x^2 dx (finite when beta > 1/2)."""
    beta = sigma.beta_hat
    if not beta > 0.5:
        raise ValueError("c2 is finite only when beta > 1/2")
    ts = getattr(sigma, "log_scale", 0.0)

    def f(t):
        return np.exp(2.0 * sigma.log_sigma(t) - t)

    r = sq.integrate_semi_infinite(lambda d: f(ts + d), 0.0, sq.Exponential(0.5), rel_tol=rel_tol)
    l = sq.integrate_semi_infinite(lambda d: f(ts - d), 0.0,
                                   sq.Exponential(0.5 * (2 * beta - 1)), rel_tol=rel_tol)
    return 2.0 * (r.value + l.value)


def omega_left_exponent(beta: float) -> float:
    """Small-zeta power of Omega: 0 when beta > 1/2, 2 beta - 1 when beta < 1/2."""
    return 0.0 if beta > 0.5 else 2.0 * beta - 1.0


def default_grid(beta: float):
    """(n, span) of the profile grids in units of the sigma scale.

    The small-argument limits are approached like x^|2 beta - 1|, and the
    evolution evaluators use U and W~ far into that regime, so the grid
    reaches left until the correction is ~1e-8 (at most 30 decades), at
    20 points per decade. When beta < 1/2 the approach is too slow for any
    such bound and the grid stops near the left edge of the sigma grid.
    """
    q = abs(2.0 * beta - 1.0)
    if beta > 0.5:
        lo = -min(30, max(4, int(np.ceil(8.0 / q))))
    else:
        lo = -24
    hi = 6
    return 20 * (hi - lo), (10.0**lo, 10.0**hi)


def _grid(scale, beta, n, span):
    dn, dspan = default_grid(beta)
    n = dn if n is None else n
    span = dspan if span is None else span
    return scale * np.logspace(np.log10(span[0]), np.log10(span[1]), n)


def build_omega_curve(setup: HomogeneitySetup, sigma, n=None, span=None,
                      rel_tol: float = 1e-10) -> ProfileCurve:
    s = float(np.exp(sigma.log_scale))
    x = _grid(s, sigma.beta_hat, n, span)
    vals = np.array([omega(setup, sigma, z, rel_tol) for z in x])
    beta = sigma.beta_hat
    return _build_curve("Omega", x, vals, omega_left_exponent(beta), False, -1.0, True,
                        direct=lambda z: omega(setup, sigma, z, rel_tol),
                        meta={"scale": s, "beta_hat": beta})


# ---------------------------------------------------------------------------
# W and W~

def w_profile(setup: HomogeneitySetup, omega_curve: ProfileCurve, r: float,
              rel_tol: float = 1e-10) -> float:
    """W(r) with zeta = r/sin(theta):

    W(r) = sqrt2 r^(-a) int_0^{pi/2} sin^(a-1) th (cos(th/2) + sin(th/2)) Omega(r/sin th) dth.

    The theta integral is taken in u = log theta below the point where
    r/sin(theta) crosses the scale of Omega.
    """
    a = setup.a
    r = float(r)
    lr = np.log(r)
    s = omega_curve.meta.get("scale", 1.0)

    def f_theta(th):
        st = np.sin(th)
        lo = omega_curve.log_eval(lr - np.log(st))
        return np.exp((a - 1.0) * np.log(st) + lo) * (np.cos(th / 2) + np.sin(th / 2))

    def f_u(u):
        th = np.exp(u)
        return f_theta(th) * th

    u_top = np.log(np.pi / 4)
    u_c = min(u_top, np.log(r / s) - 4.0)
    total = sq.integrate_finite(f_theta, np.pi / 4, np.pi / 2, rel_tol=rel_tol).value
    if u_c < u_top:
        total += sq.integrate_finite(f_u, u_c, u_top, rel_tol=rel_tol).value
    # below u_c: Omega(r/sin th) ~ (2 th / r) log, so the integrand ~ th^(1+a) log
    total += sq.integrate_semi_infinite(lambda d: f_u(u_c - d), 0.0,
                                        sq.Exponential(0.5 * a), rel_tol=rel_tol).value
    return SQRT2 * r ** (-a) * total


def w_left_exponent(a: float, beta: float) -> float:
    return -a if beta > 0.5 else 2.0 * beta - 1.0 - a


def build_w_curve(setup: HomogeneitySetup, omega_curve: ProfileCurve, n=None, span=None,
                  rel_tol: float = 1e-10) -> ProfileCurve:
    a = setup.a
    s = omega_curve.meta["scale"]
    beta = omega_curve.meta["beta_hat"]
    x = _grid(s, beta, n, span)
    vals = np.array([w_profile(setup, omega_curve, r, rel_tol) for r in x])
    return _build_curve("W", x, vals, w_left_exponent(a, beta), False, -(1.0 + a), True,
                        direct=lambda r: w_profile(setup, omega_curve, r, rel_tol),
                        meta={"scale": s, "beta_hat": beta})


def w_tilde(setup: HomogeneitySetup, w_curve: ProfileCurve, s: float):
    """W~(s) = (4 sqrt2 / 2^a) W(s^(-1/a)) s^(-(1/a + 1))."""
    a = setup.a
    s = np.asarray(s, dtype=float)
    ls = np.log(s)
    return wtilde_constant(a) * np.exp(w_curve.log_eval(-ls / a) - (1.0 / a + 1.0) * ls)


def build_w_tilde_curve(setup: HomogeneitySetup, w_curve: ProfileCurve) -> ProfileCurve:
    """W~ sampled at s = r^(-a) for the W grid, with transformed tails."""
    a = setup.a
    r = w_curve.x[::-1]
    s = r ** (-a)
    vals = w_tilde(setup, w_curve, s)
    k = wtilde_constant(a)
    # W ~ r^p (c0 + c1 log r) with r = s^(-1/a):
    # W~ ~ k s^(-p/a - 1/a - 1) (c0 - (c1/a) log s)
    def tr(t):
        return TailModel(-t.p / a - 1.0 / a - 1.0, k * t.c0, -k * t.c1 / a)

    return ProfileCurve("Wtilde", s, vals, tr(w_curve.right_tail), tr(w_curve.left_tail),
                        direct=None, meta=dict(w_curve.meta))


def w0(setup: HomogeneitySetup, w_tilde_curve: ProfileCurve, rel_tol: float = 1e-10) -> float:
    """W0 = int_0^inf W~(s) ds."""
    if w_tilde_curve.right_tail.p >= -1.0:
        raise ValueError("W~ is not integrable at infinity (small-argument regime of sigma)")
    return w_tilde_curve.integral(0.0, rel_tol)


# ---------------------------------------------------------------------------
# H-bar and U

def hbar_from_omega(setup: HomogeneitySetup, omega_curve: ProfileCurve, zeta: float,
                    rel_tol: float = 1e-10) -> float:
    """H(z) = K_H (1/z) int_z^inf w^(-(a+1)) Phi(z/w) Omega(w) dw.

    With rho = z/w = e^{-u}: H = K_H z^(-1-a) int_0^inf e^{-a u} Phi(e^{-u}) Omega(z e^u) du.
    """
    a = setup.a
    lz = np.log(float(zeta))
    phi = phi_table()
    s = omega_curve.meta.get("scale", 1.0)

    def f(u):
        u = np.asarray(u, dtype=float)
        rho = np.exp(-u)
        ph = phi(np.minimum(rho, 1.0 - 1e-16))
        return np.exp(-a * u + omega_curve.log_eval(lz + u)) * ph

    uc = max(0.0, np.log(s) - lz) + 4.0
    total = sq.integrate_finite(f, 0.0, uc, rel_tol=rel_tol).value
    total += sq.integrate_semi_infinite(lambda d: f(uc + d), 0.0, sq.Exponential(0.5 * (1 + a)),
                                        rel_tol=rel_tol).value
    return hbar_constant(a) * np.exp((-1.0 - a) * lz) * total


def hbar_from_w(setup: HomogeneitySetup, w_curve: ProfileCurve, zeta: float,
                rel_tol: float = 1e-10) -> float:
    """H(z) = K_H (1/z) int_z^inf W(s)/sqrt(s^2 - z^2) ds, with s = z cosh t."""
    a = setup.a
    zeta = float(zeta)
    lz = np.log(zeta)
    s = w_curve.meta.get("scale", 1.0)

    def f(t):
        t = np.asarray(t, dtype=float)
        # log cosh t without overflow
        lc = np.logaddexp(t, -t) - np.log(2.0)
        return np.exp(w_curve.log_eval(lz + lc))

    tc = float(np.arccosh(max(1.0, s / zeta))) + 4.0
    total = sq.integrate_finite(f, 0.0, tc, rel_tol=rel_tol).value
    total += sq.integrate_semi_infinite(lambda d: f(tc + d), 0.0, sq.Exponential(0.5 * (1 + a)),
                                        rel_tol=rel_tol).value
    return hbar_constant(a) / zeta * total


def hbar_left_exponent(a, beta):
    return -1.0 - a if beta > 0.5 else 2.0 * beta - 2.0 - a


def build_hbar_curve(setup: HomogeneitySetup, omega_curve: ProfileCurve, n=None, span=None,
                     rel_tol: float = 1e-10) -> ProfileCurve:
    a = setup.a
    s = omega_curve.meta["scale"]
    beta = omega_curve.meta["beta_hat"]
    x = _grid(s, beta, n, span)
    vals = np.array([hbar_from_omega(setup, omega_curve, z, rel_tol) for z in x])
    return _build_curve("Hbar", x, vals, hbar_left_exponent(a, beta), False, -(2.0 + a), True,
                        direct=lambda z: hbar_from_omega(setup, omega_curve, z, rel_tol),
                        meta={"scale": s, "beta_hat": beta})


def u_profile(setup: HomogeneitySetup, hbar_curve: ProfileCurve, zeta):
    """U(z) = z^(-(2+a)/a) H(z^(-1/a))."""
    a = setup.a
    lz = np.log(np.asarray(zeta, dtype=float))
    return np.exp(-(2.0 + a) / a * lz + hbar_curve.log_eval(-lz / a))


def build_u_curve(setup: HomogeneitySetup, hbar_curve: ProfileCurve) -> ProfileCurve:
    a = setup.a
    y = hbar_curve.x[::-1]
    z = y ** (-a)
    vals = u_profile(setup, hbar_curve, z)

    # H ~ y^p (c0 + c1 log y), y = z^(-1/a):
    # U ~ z^(-(2+a)/a - p/a) (c0 - (c1/a) log z)
    def tr(t):
        return TailModel(-(2.0 + a) / a - t.p / a, t.c0, -t.c1 / a)

    return ProfileCurve("U", z, vals, tr(hbar_curve.right_tail), tr(hbar_curve.left_tail),
                        meta=dict(hbar_curve.meta))


# ---------------------------------------------------------------------------
# bundle

@dataclass
class ProfileSet:
    omega: ProfileCurve
    w: ProfileCurve
    w_tilde: ProfileCurve
    hbar: ProfileCurve
    u: ProfileCurve

    def curves(self):
        return {"Omega": self.omega, "W": self.w, "Wtilde": self.w_tilde,
                "Hbar": self.hbar, "U": self.u}


def build_profiles(setup: HomogeneitySetup, sigma, n=None, span=None,
                   rel_tol: float = 1e-10) -> ProfileSet:
    om = build_omega_curve(setup, sigma, n, span, rel_tol)
    w = build_w_curve(setup, om, n, span, rel_tol)
    wt = build_w_tilde_curve(setup, w)
    hb = build_hbar_curve(setup, om, n, span, rel_tol)
    u = build_u_curve(setup, hb)
    return ProfileSet(om, w, wt, hb, u)
