"""Kernel functions Q, Phi and the collision frequency Lambda[sigma].

Q is handled in the log variable v = log s through K(v) = Q(e^v), which
satisfies K(v) = int_v^inf g(u) du with

    g(u) = |e^u - 1|^(-a) + (e^u + 1)^(-a).

K has an integrable cusp at v = 0 (g ~ |u|^(-a)), behaves like c0 - 2v for
v -> -inf and like (2/a) e^(-a v) for v -> +inf.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi, roots_legendre

from . import singquad as sq
from .io import write_csv

SQRT2 = np.sqrt(2.0)


class DivergenceError(ValueError):
    """An integral that the model requires to be finite diverges."""


@dataclass(frozen=True)
class HomogeneitySetup:
    """The homogeneity exponent a = |gamma| in (0, 1) and derived constants."""

    a: float

    def __post_init__(self):
        a = float(self.a)
        if not (0.0 < a < 1.0) or not np.isfinite(a):
            raise ValueError(f"a must lie in (0, 1), got {self.a!r}")
        object.__setattr__(self, "a", a)

    @property
    def prefactor(self) -> float:
        """8 pi a / (1 - a), the fixed-point prefactor."""
        return 8.0 * np.pi * self.a / (1.0 - self.a)

    @property
    def drift(self) -> float:
        """1/a - 1, the rate of the radial drift of characteristics."""
        return 1.0 / self.a - 1.0


# ---------------------------------------------------------------------------
# exact evaluation of K(v) = Q(e^v)

def g_log(u, a):
    """Integrand of K in the log variable (and minus its derivative)."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide="ignore"):
        return np.abs(np.expm1(u)) ** (-a) + (np.exp(u) + 1.0) ** (-a)


@lru_cache(maxsize=32)
def _series_data(a, nterm=60, nq=24):
    j = np.arange(nterm)
    # (a)_{2j} / (2j)!
    c = np.exp(gammaln(a + 2 * j) - gammaln(a) - gammaln(2 * j + 1))
    sj, wj = roots_jacobi(nq, 0.0, -a)
    tj = (1.0 + sj) / 2.0
    wj = wj / 2.0 ** (1.0 - a)
    sl, wl = roots_legendre(nq)
    tl = (1.0 + sl) / 2.0
    wl = wl / 2.0
    k1 = 2.0 * np.sum(c / (a + 2 * j) * np.exp(-(a + 2 * j)))
    data = dict(c=c, j=j, tj=tj, wj=wj, tl=tl, wl=wl)
    k0 = k1 + _j_integral(np.array([1.0]), a, data)[0]
    km1 = k0 - _j_integral(np.array([-1.0]), a, data)[0]
    data.update(k0=k0, km1=km1)
    return data


def _j_integral(x, a, data):
    """int_0^x g(u) du for |x| <= 1 (signed)."""
    tj, wj, tl, wl = data["tj"], data["wj"], data["tl"], data["wl"]
    xt = x[:, None] * tj
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(xt == 0.0, 1.0, np.expm1(xt) / np.where(xt == 0.0, 1.0, xt))
    sing = np.sign(x) * np.abs(x) ** (1.0 - a) * (ratio ** (-a) @ wj)
    reg = x * ((np.exp(x[:, None] * tl) + 1.0) ** (-a) @ wl)
    return sing + reg


def k_log(v, a):
    """K(v) = Q(e^v) by convergent series (|v| >= 1) and Jacobi quadrature (|v| < 1)."""
    v = np.asarray(v, dtype=float)
    shape = v.shape
    v = v.ravel()
    d = _series_data(float(a))
    c, j = d["c"], d["j"]
    out = np.empty_like(v)
    pos = v >= 1.0
    neg = v <= -1.0
    mid = ~(pos | neg)
    if pos.any():
        out[pos] = 2.0 * (np.exp(-np.outer(v[pos], a + 2 * j)) @ (c / (a + 2 * j)))
    if neg.any():
        vn = v[neg]
        jj = j[1:]
        terms = np.exp(-2.0 * jj)[None, :] - np.exp(np.outer(vn, 2 * jj))
        out[neg] = d["km1"] + 2.0 * ((-1.0 - vn) + terms @ (c[1:] / (2 * jj)))
    if mid.any():
        out[mid] = d["k0"] - _j_integral(v[mid], a, d)
    return out.reshape(shape)


def k_left_constant(a):
    """c0 in K(v) = c0 - 2v + O(e^{2v}) as v -> -inf."""
    d = _series_data(float(a))
    jj = d["j"][1:]
    return d["km1"] - 2.0 + 2.0 * np.sum(d["c"][1:] * np.exp(-2.0 * jj) / (2 * jj))


# ---------------------------------------------------------------------------
# Q by direct quadrature

def q_kernel(setup: HomogeneitySetup, s: float, rel_tol: float = 1e-12) -> float:
    """Q(s) = int_s^inf (|z-1|^(-a) + (z+1)^(-a)) dz/z by singular quadrature in z."""
    s = float(s)
    if not s > 0.0:
        raise ValueError("Q(s) needs s > 0")
    a = setup.a

    def f(anchor, d):
        z = anchor + d
        # |z - 1| from the offset when anchored at the singular point
        zm1 = d if anchor == 1.0 else z - 1.0
        return (np.abs(zm1) ** (-a) + (z + 1.0) ** (-a)) / z

    top = max(2.0, 2.0 * s)
    sings = [sq.SingularitySpec(1.0, a)] if s <= 1.0 else []
    total = 0.0
    if s < 1.0:
        # [s, 1] has 1/z growth towards small s; cut it into octaves in z
        edges = [s]
        while edges[-1] * 8.0 < 1.0:
            edges.append(edges[-1] * 8.0)
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += sq.integrate_finite(f, lo, hi, rel_tol=rel_tol, offset_form=True).value
        lo = edges[-1]
        total += sq.integrate_finite(f, lo, top, sings, rel_tol=rel_tol, offset_form=True).value
    else:
        total += sq.integrate_finite(f, s, top, sings, rel_tol=rel_tol, offset_form=True).value
    total += sq.integrate_semi_infinite(f, top, sq.Algebraic(1.0 + a),
                                        rel_tol=rel_tol, offset_form=True).value
    return total


# ---------------------------------------------------------------------------
# tabulated kernel

@dataclass(frozen=True)
class KernelTable:
    """K(v) = Q(e^v) sampled on a uniform grid with analytic tails.

    Between nodes the table uses cubic Hermite interpolation with the exact
    slopes K'(v) = -g(v); inside |v| < exact_zone (around the cusp at 0) the
    exact evaluator is used instead.
    """

    a: float
    v_grid: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    left_c0: float
    left_c1: float
    right_coef: float
    exact_zone: float

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        shape = v.shape
        v = v.ravel()
        out = np.empty_like(v)
        x = self.v_grid
        lo, hi = x[0], x[-1]
        left = v < lo
        right = v > hi
        zone = np.abs(v) < self.exact_zone
        inner = ~(left | right | zone)
        out[left] = self.left_c0 + self.left_c1 * v[left]
        out[right] = self.right_coef * np.exp(-self.a * v[right])
        if zone.any():
            out[zone] = k_log(v[zone], self.a)
        if inner.any():
            vi = v[inner]
            h = (hi - lo) / (len(x) - 1)
            r = (vi - lo) / h
            j = np.rint(r)
            # snap to nodes so that node lookups return the stored values exactly
            r = np.where(np.abs(r - j) < 1e-9, j, r)
            i = np.clip(np.floor(r).astype(np.int64), 0, len(x) - 2)
            t = r - i
            t2 = t * t
            t3 = t2 * t
            h00 = 2 * t3 - 3 * t2 + 1
            h10 = t3 - 2 * t2 + t
            h01 = -2 * t3 + 3 * t2
            h11 = t3 - t2
            out[inner] = (h00 * self.values[i] + h10 * h * self.slopes[i]
                          + h01 * self.values[i + 1] + h11 * h * self.slopes[i + 1])
        return out.reshape(shape)

    def tail_info(self) -> dict:
        return {"a": self.a, "left_c0": self.left_c0, "left_c1": self.left_c1,
                "right_coef": self.right_coef, "exact_zone": self.exact_zone,
                "v_lo": float(self.v_grid[0]), "v_hi": float(self.v_grid[-1]),
                "n": int(len(self.v_grid))}

    def to_csv(self, path):
        write_csv(path, ["v", "Q"], [self.v_grid, self.values])
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(self.tail_info(), fh, indent=2, sort_keys=True)


def build_kernel_table(setup: HomogeneitySetup, v_lo: float = -100.0, v_hi: float = 100.0,
                       n: int = 20001, exact_zone: float = 0.5,
                       validate: int = 0) -> KernelTable:
    """Tabulate K on a uniform grid.

    validate > 0 compares that many interval midpoints against q_kernel and
    raises if the relative error exceeds 1e-8.
    """
    if not v_lo < v_hi:
        raise ValueError("need v_lo < v_hi")
    if n < 64:
        raise ValueError("need at least 64 nodes")
    a = setup.a
    v = np.linspace(v_lo, v_hi, n)
    vals = k_log(v, a)
    slopes = -g_log(v, a)
    slopes[v == 0.0] = -np.inf
    if not (np.all(np.diff(vals) < 0) and np.all(vals > 0)):
        raise RuntimeError("kernel table is not strictly decreasing and positive")
    c0 = float(vals[0] + 2.0 * v[0])
    right = float(vals[-1] * np.exp(a * v[-1]))
    table = KernelTable(a, v, vals, np.where(np.isfinite(slopes), slopes, 0.0), c0, -2.0,
                        right, float(exact_zone))
    if validate:
        rng = np.random.default_rng(12345)
        mids = 0.5 * (v[:-1] + v[1:])
        pick = mids[rng.choice(len(mids), size=min(validate, len(mids)), replace=False)]
        pick = pick[pick < 60.0]  # keep Q(e^v) representable for q_kernel
        ref = np.array([q_kernel(setup, np.exp(p)) for p in pick])
        err = np.max(np.abs(table(pick) / ref - 1.0)) if len(pick) else 0.0
        if err > 1e-8:
            raise RuntimeError(f"kernel table interpolation error {err:.3e} exceeds 1e-8")
    return table


# ---------------------------------------------------------------------------
# Phi

def _n_rho(rho):
    """sqrt(1 - sqrt(1 - rho^2)) + sqrt(1 + sqrt(1 - rho^2)) in half-angle form."""
    half = 0.5 * np.arcsin(np.clip(rho, 0.0, 1.0))
    return SQRT2 * (np.sin(half) + np.cos(half))


def phi_kernel(s: float, rel_tol: float = 1e-13) -> float:
    """Phi(s) for 0 < s < 1.

    Both inverse-square-root endpoints are removed by the trigonometric
    substitution rho^2 = s^2 + (1 - s^2) sin^2(psi), which gives
    Phi(s) = int_0^{pi/2} N(rho)/rho dpsi with a bounded integrand.
    """
    s = float(s)
    if not (0.0 < s < 1.0):
        raise ValueError("Phi(s) needs 0 < s < 1")
    s2 = s * s

    def f(psi):
        sp = np.sin(psi)
        rho = np.sqrt(s2 + (1.0 - s2) * sp * sp)
        return _n_rho(rho) / rho

    # the integrand has a peak of width ~ s at psi = 0; split geometrically
    edges = [0.0]
    w = max(s, 1e-300)
    while w < 0.5:
        edges.append(w)
        w *= 16.0
    edges.append(np.pi / 2)
    return float(sum(sq.integrate_finite(f, lo, hi, rel_tol=rel_tol).value
                     for lo, hi in zip(edges[:-1], edges[1:])))


class PhiTable:
    """Vectorized Phi via a cubic spline in x = log(s/(1-s)).

    Node values use a second, independent representation:
    Phi(s) = int_0^inf N(rho(t)) / sqrt(1 + s^2 sinh^2 t) dt with
    rho(t) = s cosh t / sqrt(1 + s^2 sinh^2 t), integrated by composite
    Gauss-Legendre on unit panels.
    """

    def __init__(self, x_lo=-40.0, x_hi=40.0, n=3201):
        from scipy.interpolate import CubicSpline

        self.x = np.linspace(x_lo, x_hi, n)
        s = 1.0 / (1.0 + np.exp(-self.x))
        self.values = self._t_form(s)
        self.spline = CubicSpline(self.x, self.values)
        self.left_slope = -SQRT2
        self.s_lo = s[0]
        self.one_minus_s_hi = 1.0 / (1.0 + np.exp(x_hi))

    @staticmethod
    def _t_form(s):
        sl, wl = roots_legendre(20)
        tl = (1.0 + sl) / 2.0
        wl = wl / 2.0
        out = np.empty_like(s)
        for k, sk in enumerate(s):
            T = np.arcsinh(1.0 / sk) + 40.0
            m = int(np.ceil(T))
            t = (np.arange(m)[:, None] + tl[None, :]).ravel()
            w = np.tile(wl, m)
            u = sk * np.sinh(t)
            den = np.sqrt(1.0 + u * u)
            rho = np.minimum(sk * np.cosh(t) / den, 1.0)
            out[k] = np.sum(w * _n_rho(rho) / den)
        return out

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if np.any((s <= 0.0) | (s >= 1.0)):
            raise ValueError("Phi(s) needs 0 < s < 1")
        x = np.log(s) - np.log1p(-s)
        out = self.spline(np.clip(x, self.x[0], self.x[-1]))
        left = x < self.x[0]
        if np.any(left):
            out = np.where(left, self.values[0] + self.left_slope * (x - self.x[0]), out)
        right = x > self.x[-1]
        if np.any(right):
            # Phi(s) = pi - O(sqrt(1 - s))
            gap = (np.pi - self.values[-1]) * np.exp(-(x - self.x[-1]) / 2.0)
            out = np.where(right, np.pi - gap, out)
        return out


@lru_cache(maxsize=1)
def phi_table() -> PhiTable:
    return PhiTable()


# ---------------------------------------------------------------------------
# Lambda[sigma]

class SigmaFunction:
    """Adapts a plain sigma(y) callable to the log-variable interface.

    beta is the small-argument exponent of sigma; scale is a typical y.
    """

    def __init__(self, fn, beta, scale=1.0):
        self.fn = fn
        self.beta_hat = float(beta)
        self.log_scale = float(np.log(scale))

    def log_sigma(self, xi):
        xi = np.asarray(xi, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(self.fn(np.exp(xi)))


def _sigma_beta(sigma):
    beta = getattr(sigma, "beta_hat", None)
    if beta is None:
        raise ValueError("sigma must expose beta_hat (small-argument exponent)")
    return float(beta)


def lambda_of(setup: HomogeneitySetup, sigma, y: float, rel_tol: float = 1e-10) -> float:
    """Lambda(y) = 8 pi int_R |y - zeta|^(-a) sigma(|zeta|)/|zeta| dzeta.

    For y != 0 the substitution zeta = |y| e^d gives
    Lambda(y) = 8 pi |y|^(-a) int_R g(d) sigma(|y| e^d) dd with g the
    integrand of K; the cusp of g at d = 0 has exponent a.
    """
    a = setup.a
    beta = _sigma_beta(sigma)
    y = abs(float(y))
    if y == 0.0:
        if not beta > a:
            raise DivergenceError("Lambda(0) diverges unless the small-argument exponent exceeds a")
        t0 = getattr(sigma, "log_scale", 0.0)

        def h(t):
            return np.exp(sigma.log_sigma(t) - a * t)

        right = sq.integrate_semi_infinite(lambda d: h(t0 + d), 0.0, sq.Exponential(0.5 * a),
                                           rel_tol=rel_tol)
        left = sq.integrate_semi_infinite(lambda d: h(t0 - d), 0.0,
                                          sq.Exponential(0.5 * (beta - a)), rel_tol=rel_tol)
        return 16.0 * np.pi * (left.value + right.value)
    if not beta > 0.0:
        raise DivergenceError("Lambda diverges unless sigma vanishes at the origin")
    ly = np.log(y)

    def core(d):
        return g_log(d, a) * np.exp(sigma.log_sigma(ly + d))

    # the decay of each tail only sets in past the scale of sigma, so the
    # semi-infinite maps start there
    ts = getattr(sigma, "log_scale", 0.0)
    d_right = max(1.0, ts - ly + 2.0 / a)
    d_left = max(1.0, ly - ts + 2.0 / beta)
    total = sq.integrate_finite(core, -1.0, 1.0, [sq.SingularitySpec(0.0, a)],
                                rel_tol=rel_tol).value
    if d_right > 1.0:
        total += sq.integrate_finite(core, 1.0, d_right, rel_tol=rel_tol).value
    total += sq.integrate_semi_infinite(core, d_right, sq.Exponential(0.5 * a),
                                        rel_tol=rel_tol).value
    if d_left > 1.0:
        total += sq.integrate_finite(lambda d: core(-d), 1.0, d_left, rel_tol=rel_tol).value
    total += sq.integrate_semi_infinite(lambda d: core(-d), d_left, sq.Exponential(0.5 * beta),
                                        rel_tol=rel_tol).value
    return 8.0 * np.pi * y ** (-a) * total
