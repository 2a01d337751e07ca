"""Stationary damping problem for the cutoff profile sigma.

In the variables xi = log y, phi = log sigma the profile is a fixed point of

    T_eps[phi](xi) = -c int_R exp(phi(z) - a z) (1 + eps e^{-z})^{-1} K(xi - z) dz,

with c = 8 pi a / (1 - a) and K(v) = Q(e^v). The z-integral is discretized
by product integration: phi-dependent factor interpolated by local cubics
on the uniform grid, kernel moments integrated exactly (including the cusp
of K at 0). Outside the grid phi follows its tail models: affine on the
left, -(c0 + c1 xi) e^{-a xi} on the right with c1 = 16 pi/(1 - a).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import roots_jacobi, roots_legendre

from . import kernels
from . import singquad as sq
from .io import read_csv, write_csv
from .kernels import HomogeneitySetup, KernelTable, lambda_of


class InvariantError(RuntimeError):
    """A CutoffProfile invariant does not hold."""


class ConvergenceError(RuntimeError):
    """Iteration did not converge; carries the last residual."""

    def __init__(self, message, residual=np.nan, profile=None):
        super().__init__(message)
        self.residual = residual
        self.profile = profile


class ContinuationError(RuntimeError):
    """Consecutive continuation steps are not contracting."""


# ---------------------------------------------------------------------------
# profile type

@dataclass
class CutoffProfile:
    xi_grid: np.ndarray
    phi: np.ndarray
    a: float
    epsilon: float = 1.0
    beta_hat: float = np.nan
    residual_sup: float = np.inf
    left_tail_slope: float = 0.0
    right_tail: tuple = (0.0, 0.0)
    k_bar: float = np.nan
    history: list = field(default_factory=list)

    def __post_init__(self):
        self.xi_grid = np.asarray(self.xi_grid, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self._spline = None
        self._spline_src = None

    # evaluation -----------------------------------------------------------
    @property
    def spline(self):
        if self._spline is None or self._spline_src is not self.phi:
            self._spline = CubicSpline(self.xi_grid, self.phi)
            self._spline_src = self.phi
        return self._spline

    def log_sigma(self, xi):
        """phi(xi) on the whole real line (grid spline plus tail models)."""
        xi = np.asarray(xi, dtype=float)
        x0, x1 = self.xi_grid[0], self.xi_grid[-1]
        out = self.spline(np.clip(xi, x0, x1))
        left = xi < x0
        right = xi > x1
        if np.any(left):
            out = np.where(left, self.phi[0] + self.left_tail_slope * (xi - x0), out)
        if np.any(right):
            c0, c1 = self.right_tail
            with np.errstate(over="ignore", under="ignore"):
                tail = -(c0 + c1 * xi) * np.exp(-self.a * xi)
            out = np.where(right, tail, out)
        return out

    def sigma(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return np.exp(self.log_sigma(np.log(y)))

    @property
    def log_scale(self) -> float:
        """xi at which sigma = 1/2 (the characteristic scale, in log form)."""
        target = np.log(0.5)
        i = int(np.searchsorted(self.phi, target))
        i = min(max(i, 1), len(self.phi) - 1)
        lo, hi = self.xi_grid[i - 1], self.xi_grid[i]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if self.log_sigma(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    @property
    def scale(self) -> float:
        return float(np.exp(self.log_scale))

    @property
    def h(self) -> float:
        return float(self.xi_grid[1] - self.xi_grid[0])

    # invariants -------------------------------------------------------------
    def check_invariants(self):
        """Raise InvariantError naming the first violated invariant."""
        phi, xi, a = self.phi, self.xi_grid, self.a
        if not np.all(np.isfinite(phi)):
            raise InvariantError("phi must be finite")
        if not np.all(phi < 0.0):
            raise InvariantError("phi < 0 (sigma < 1) violated")
        if not np.all(np.diff(phi) > 0.0):
            raise InvariantError("phi strictly increasing (sigma monotone) violated")
        neg = xi <= 0.0
        bound = 0.5 * a * xi[neg] - 2.0 * np.log(1.0 / a)
        if not np.all(phi[neg] <= bound):
            raise InvariantError("a-priori bound phi <= (a/2) xi - 2 log(1/a) violated on xi <= 0")
        return True

    def apriori_margin(self) -> float:
        """min over xi <= 0 nodes of |phi| e^|phi| - a^-2 e^{-a xi}/(1 + eps e^{-xi}), relative."""
        xi = self.xi_grid[self.xi_grid <= 0.0]
        p = np.abs(self.phi[self.xi_grid <= 0.0])
        a, eps = self.a, self.epsilon
        # compare in logs to avoid overflow
        lhs = np.log(p) + p
        rhs = -2.0 * np.log(a) - a * xi - np.logaddexp(0.0, np.log(eps) - xi) if eps > 0 \
            else -2.0 * np.log(a) - a * xi
        return float(np.min(lhs - rhs))

    # serialization ----------------------------------------------------------
    def metadata(self) -> dict:
        return {
            "a": self.a, "epsilon": self.epsilon, "beta_hat": self.beta_hat,
            "residual_sup": self.residual_sup, "left_tail_slope": self.left_tail_slope,
            "right_tail_c0": self.right_tail[0], "right_tail_c1": self.right_tail[1],
            "k_bar": self.k_bar, "xi_lo": float(self.xi_grid[0]),
            "xi_hi": float(self.xi_grid[-1]), "n": int(len(self.xi_grid)),
            "scale": self.scale,
        }

    def to_csv(self, path):
        write_csv(path, ["xi", "phi", "sigma"], [self.xi_grid, self.phi, np.exp(self.phi)])
        meta = self.metadata()
        meta["history"] = self.history
        from .io import write_json
        write_json(str(path) + ".json", meta)

    @classmethod
    def from_csv(cls, path):
        _, cols = read_csv(path)
        with open(str(path) + ".json", encoding="utf-8") as fh:
            meta = json.load(fh)
        return cls(cols["xi"], cols["phi"], float(meta["a"]), float(meta["epsilon"]),
                   float(meta["beta_hat"]), float(meta["residual_sup"]),
                   float(meta["left_tail_slope"]),
                   (float(meta["right_tail_c0"]), float(meta["right_tail_c1"])),
                   float(meta["k_bar"]), meta.get("history", []))


class ScaledSigma:
    """View of a profile with sigma multiplied by a constant (negative control)."""

    def __init__(self, profile: CutoffProfile, factor: float):
        self.base = profile
        self.factor = float(factor)
        self.beta_hat = profile.beta_hat
        self.log_scale = profile.log_scale
        self.a = profile.a

    def log_sigma(self, xi):
        return self.base.log_sigma(xi) + np.log(self.factor)

    def sigma(self, y):
        return self.factor * self.base.sigma(y)


class RescaledSigma:
    """sigma_c(y) = sigma(c y)."""

    def __init__(self, profile, c: float):
        self.base = profile
        self.shift = float(np.log(c))
        self.beta_hat = profile.beta_hat
        self.log_scale = profile.log_scale - self.shift
        self.a = profile.a

    def log_sigma(self, xi):
        return self.base.log_sigma(np.asarray(xi, dtype=float) + self.shift)

    def sigma(self, y):
        return self.base.sigma(np.asarray(y, dtype=float) * np.exp(self.shift))


# ---------------------------------------------------------------------------
# discretized operator

def _lagrange(t):
    """Cubic Lagrange basis through t = -1, 0, 1, 2."""
    return np.array([
        -t * (t - 1) * (t - 2) / 6.0,
        (t + 1) * (t - 1) * (t - 2) / 2.0,
        -(t + 1) * t * (t - 2) / 2.0,
        (t + 1) * t * (t - 1) / 6.0,
    ])


def _cusp_parts(v, a, nq=24):
    """Split J(v) = int_0^v g = sgn(v)|v|^(1-a) A(v) + B(v) with A, B smooth."""
    sj, wj = roots_jacobi(nq, 0.0, -a)
    tj = (1.0 + sj) / 2.0
    wj = wj / 2.0 ** (1.0 - a)
    sl, wl = roots_legendre(nq)
    tl = (1.0 + sl) / 2.0
    wl = wl / 2.0
    vt = v[:, None] * tj
    safe = np.where(vt == 0.0, 1.0, vt)
    ratio = np.where(vt == 0.0, 1.0, np.expm1(vt) / safe)
    A = ratio ** (-a) @ wj
    B = v * ((np.exp(v[:, None] * tl) + 1.0) ** (-a) @ wl)
    return A, B


def kernel_moments(table: KernelTable, h: float, kmin: int, kmax: int, nq: int = 20):
    """kappa_p(k) = h int_0^1 K((k - t) h) l_p(t) dt for k in [kmin, kmax].

    For k = 0, 1 the cusp of K sits at an endpoint and the moments are
    computed from the split K = K(0) - sgn|v|^(1-a) A - B with a Gauss-Jacobi
    rule for the |v|^(1-a) factor.
    """
    a = table.a
    k = np.arange(kmin, kmax + 1)
    sl, wl = roots_legendre(nq)
    t = (1.0 + sl) / 2.0
    wl = wl / 2.0
    L = _lagrange(t)
    V = (k[:, None] - t[None, :]) * h
    Kv = table(V)
    kap = h * np.einsum("kq,q,pq->pk", Kv, wl, L)
    k0 = kernels.k_log(np.array([0.0]), a)[0]
    sj, wj = roots_jacobi(nq, 0.0, 1.0 - a)
    tj = (1.0 + sj) / 2.0
    wj = wj / 2.0 ** (2.0 - a)
    for kk in (0, 1):
        if kk < kmin or kk > kmax:
            continue
        if kk == 1:
            tJ = 1.0 - tj          # (1 - t)^(1-a) weight
            vA = tj * h
            vB = (1.0 - t) * h
            sgn = 1.0
        else:
            tJ = tj                # t^(1-a) weight
            vA = -tj * h
            vB = -t * h
            sgn = -1.0
        A, _ = _cusp_parts(vA, a)
        _, B = _cusp_parts(vB, a)
        base = k0 * (L @ wl)
        sing = sgn * h ** (1.0 - a) * (_lagrange(tJ) @ (wj * A))
        reg = L @ (wl * B)
        kap[:, kk - kmin] = h * (base - sing - reg)
    return k, kap


def _tail_nodes(extent=1200.0, growth=1.5, nq=16):
    sl, wl = roots_legendre(nq)
    edges = [0.0]
    e = 1.0
    while e < extent:
        edges.append(e)
        e *= growth
    edges.append(extent)
    tq, wq = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        tq.append(lo + (hi - lo) * (1.0 + sl) / 2.0)
        wq.append((hi - lo) * wl / 2.0)
    return np.concatenate(tq), np.concatenate(wq)


class FixedPointOperator:
    """T_eps on a uniform grid; the matrices depend only on (a, h, n)."""

    def __init__(self, setup: HomogeneitySetup, table: KernelTable, xi_lo=-40.0, xi_hi=40.0,
                 n=2048):
        if n < 16 or not xi_lo < xi_hi:
            raise ValueError("bad grid")
        self.setup = setup
        self.a = a = setup.a
        self.n = n
        self.x = np.linspace(xi_lo, xi_hi, n)
        self.h = h = self.x[1] - self.x[0]
        self.c = setup.prefactor
        self.c1 = 16.0 * np.pi / (1.0 - a)
        k, kap = kernel_moments(table, h, -(n - 2), n - 1)
        M = np.zeros((n, n + 2))
        rows = np.arange(n)
        for m in range(n - 1):
            idx = rows - m - k[0]
            for p in range(4):
                M[:, m + p] += kap[p, idx]
        self.M = M
        self.tq, self.wq = _tail_nodes()
        D = self.x - self.x[0]
        self.KL = table(D[:, None] + self.tq[None, :]) * self.wq
        D = self.x - self.x[-1]
        self.KR = table(D[:, None] - self.tq[None, :]) * self.wq

    def tails(self, phi):
        slope = (phi[1] - phi[0]) / self.h
        c0 = -phi[-1] * np.exp(self.a * self.x[-1]) - self.c1 * self.x[-1]
        return slope, c0

    def extend(self, phi, z):
        slope, c0 = self.tails(phi)
        out = np.empty_like(z)
        L = z < self.x[0]
        R = ~L
        out[L] = phi[0] + slope * (z[L] - self.x[0])
        out[R] = -(c0 + self.c1 * z[R]) * np.exp(-self.a * z[R])
        return out

    def _log_weight(self, phi_z, z, eps):
        lw = phi_z - self.a * z
        if eps > 0:
            lw = lw - np.logaddexp(0.0, np.log(eps) - z)
        return lw

    def apply(self, phi, eps, prefactor_scale=1.0):
        """Return (T_eps[phi] at the nodes, weights f at the nodes)."""
        phi = np.asarray(phi, dtype=float)
        x, h = self.x, self.h
        zg = np.array([x[0] - h, x[-1] + h])
        ghost = self.extend(phi, zg)
        ph = np.concatenate([[ghost[0]], phi, [ghost[1]]])
        zz = np.concatenate([[zg[0]], x, [zg[1]]])
        f = np.exp(self._log_weight(ph, zz, eps))
        total = self.M @ f
        zl = x[0] - self.tq
        total += self.KL @ np.exp(self._log_weight(self.extend(phi, zl), zl, eps))
        zr = x[-1] + self.tq
        total += self.KR @ np.exp(self._log_weight(self.extend(phi, zr), zr, eps))
        return -self.c * prefactor_scale * total, f[1:-1]

    def make_profile(self, phi, eps, residual=np.inf) -> CutoffProfile:
        slope, c0 = self.tails(phi)
        return CutoffProfile(self.x.copy(), np.asarray(phi, dtype=float).copy(), self.a,
                             float(eps), np.nan, float(residual), float(slope),
                             (float(c0), float(self.c1)))


_OPERATORS = {}


def get_operator(setup, table, xi_lo=-40.0, xi_hi=40.0, n=2048) -> FixedPointOperator:
    """Cached operator; building it costs about a second."""
    key = (setup.a, float(xi_lo), float(xi_hi), int(n), id(table))
    op = _OPERATORS.get(key)
    if op is None:
        op = FixedPointOperator(setup, table, xi_lo, xi_hi, n)
        _OPERATORS.clear()
        _OPERATORS[key] = op
    return op


def _operator_for(setup, table, profile):
    x = profile.xi_grid
    return get_operator(setup, table, x[0], x[-1], len(x))


def apply_T(setup: HomogeneitySetup, table: KernelTable, profile: CutoffProfile,
            epsilon: float, prefactor_scale: float = 1.0) -> np.ndarray:
    """T_eps[phi] at the profile's grid nodes."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    if np.any(profile.phi > 0):
        raise ValueError("phi must be <= 0")
    op = _operator_for(setup, table, profile)
    return op.apply(profile.phi, epsilon, prefactor_scale)[0]


# ---------------------------------------------------------------------------
# iteration

def _anderson_step(X, G, m):
    """Type-II Anderson update from histories of iterates X and map values G."""
    F = [g - x for x, g in zip(X, G)]
    if len(F) < 2:
        return G[-1]
    dF = np.array([F[i + 1] - F[i] for i in range(len(F) - 1)][-m:]).T
    dG = np.array([G[i + 1] - G[i] for i in range(len(G) - 1)][-m:]).T
    gamma, *_ = np.linalg.lstsq(dF, F[-1], rcond=None)
    return G[-1] - dG @ gamma


def solve_regularized(setup: HomogeneitySetup, table: KernelTable, epsilon: float,
                      init: CutoffProfile, damping: float = 0.5, tol: float = 1e-10,
                      max_iter: int = 2000, anderson: int = 0) -> CutoffProfile:
    """Damped fixed-point iteration phi <- (1 - w) phi + w T_eps[phi].

    anderson > 0 switches on Anderson mixing with that memory, applied to the
    damped map; it falls back to the plain damped step whenever the mixed
    iterate leaves the admissible set phi < 0.
    """
    if not (0.0 < damping <= 1.0):
        raise ValueError("damping must lie in (0, 1]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if np.any(init.phi > 0):
        raise ValueError("initial phi must be <= 0")
    op = _operator_for(setup, table, init)
    phi = init.phi.copy()
    X, G = [], []
    res = np.inf
    for it in range(1, max_iter + 1):
        Tp, _ = op.apply(phi, epsilon)
        res = float(np.max(np.abs(phi - Tp)))
        if res <= tol:
            break
        damped = (1.0 - damping) * phi + damping * Tp
        if anderson > 0:
            X.append(phi.copy())
            G.append(damped)
            X, G = X[-(anderson + 1):], G[-(anderson + 1):]
            cand = _anderson_step(X, G, anderson)
            phi = cand if np.all(cand < 0) and np.all(np.isfinite(cand)) else damped
        else:
            phi = damped
    else:
        prof = op.make_profile(phi, epsilon, res)
        raise ConvergenceError(f"no convergence in {max_iter} iterations "
                               f"(residual {res:.3e})", res, prof)
    prof = op.make_profile(phi, epsilon, res)
    prof.k_bar = float(np.max(np.abs(phi[op.x >= 0]))) if np.any(op.x >= 0) else np.nan
    prof.history = [{"epsilon": float(epsilon), "iterations": it, "residual": res}]
    prof.check_invariants()
    return prof


def default_schedule(eps_final: float = 1e-8, limit_solve: bool = True):
    """eps_k = 4^-k down to the first value <= eps_final, then optionally eps = 0."""
    sched = [1.0]
    while sched[-1] > eps_final:
        sched.append(sched[-1] / 4.0)
    if limit_solve:
        sched.append(0.0)
    return sched


def initial_profile(setup, xi_lo=-40.0, xi_hi=40.0, n=2048) -> CutoffProfile:
    """phi = 0 (sigma = 1), the top of the order interval."""
    x = np.linspace(xi_lo, xi_hi, n)
    return CutoffProfile(x, np.zeros(n), setup.a, 1.0)


def continue_to_zero(setup: HomogeneitySetup, table: KernelTable, schedule=None,
                     tol: float = 1e-10, eps_final: float = 1e-8, limit_solve: bool = True,
                     init: Optional[CutoffProfile] = None, damping: float = 0.5,
                     anderson: int = 0, xi_lo=-40.0, xi_hi=40.0, n=2048,
                     progress=None) -> CutoffProfile:
    """Continuation in eps with warm starts.

    The Cauchy trend is checked over the positive-eps steps; a final eps = 0
    entry (the limit solve) is reported separately in the history.
    """
    if schedule is None:
        schedule = default_schedule(eps_final, limit_solve)
    schedule = [float(e) for e in schedule]
    if any(b >= a_ for a_, b in zip(schedule[:-1], schedule[1:])):
        raise ValueError("schedule must be strictly decreasing")
    if schedule[-1] > eps_final:
        raise ValueError("schedule must end at or below eps_final")
    prof = init if init is not None else initial_profile(setup, xi_lo, xi_hi, n)
    history = []
    diffs = []
    prev = None
    for eps in schedule:
        new = solve_regularized(setup, table, eps, prof, damping, tol, anderson=anderson)
        step = new.history[0]
        if prev is not None:
            step["sup_diff"] = float(np.max(np.abs(new.phi - prev.phi)))
            if eps > 0:
                diffs.append(step["sup_diff"])
        history.append(step)
        if progress is not None:
            progress(step)
        prev = prof = new
    if len(diffs) >= 3 and not (diffs[-3] > diffs[-2] > diffs[-1]):
        raise ContinuationError(f"continuation not Cauchy over the last steps: {diffs[-3:]}")
    prof.history = history
    bi = estimate_beta(setup, prof) if prof.epsilon <= 1e-6 else None
    if bi is not None:
        prof.beta_hat = bi.beta_slope
    prof.check_invariants()
    return prof


# ---------------------------------------------------------------------------
# diagnostics

@dataclass(frozen=True)
class BetaEstimate:
    beta_integral: float
    beta_slope: float
    marginal: bool = False

    def __iter__(self):
        return iter((self.beta_integral, self.beta_slope))


def _sigma_weight_integral(profile, a, eps, rel_tol, rate_left):
    """int_R exp(phi(z) - a z) / (1 + eps e^{-z}) dz."""
    z0 = profile.log_scale

    def f(z):
        lw = profile.log_sigma(z) - a * z
        if eps > 0:
            lw = lw - np.logaddexp(0.0, np.log(eps) - z)
        return np.exp(lw)

    right = sq.integrate_semi_infinite(lambda d: f(z0 + d), 0.0, sq.Exponential(0.5 * a),
                                       rel_tol=rel_tol)
    left = sq.integrate_semi_infinite(lambda d: f(z0 - d), 0.0, sq.Exponential(rate_left),
                                      rel_tol=rel_tol)
    return left.value + right.value


def estimate_beta(setup: HomogeneitySetup, profile: CutoffProfile,
                  rel_tol: float = 1e-10) -> BetaEstimate:
    """Small-argument exponent of sigma by two routes.

    beta_slope: least-squares slope of phi against xi over the leftmost
    decade of the grid. beta_integral: (16 pi a/(1-a)) int sigma(z) z^(-1-a)
    dz (with the (1 + eps/z)^-1 regularization factor when eps > 0).
    """
    if profile.epsilon > 1e-6:
        raise ValueError("estimate_beta needs a profile converged at eps <= 1e-6")
    a = setup.a
    xi, phi = profile.xi_grid, profile.phi
    sel = (xi <= xi[0] + np.log(10.0)) & (phi < np.log(1e-3))
    if sel.sum() < 3:
        raise ValueError("grid does not reach sigma < 1e-3 over its leftmost decade")
    slope = float(np.polyfit(xi[sel], phi[sel], 1)[0])
    if slope - a <= 1e-6:
        return BetaEstimate(np.inf, slope, True)
    rate = 0.5 * (min(slope, profile.left_tail_slope) - a)
    if profile.epsilon > 0:
        rate = 0.5 * (min(slope, profile.left_tail_slope) - a + 1.0)
    integral = _sigma_weight_integral(profile, a, profile.epsilon, rel_tol, rate)
    return BetaEstimate(float(2.0 * setup.prefactor * integral), slope, False)


def damping_exponent(setup: HomogeneitySetup, sigma, y: float, horizon: float = np.inf,
                     rel_tol: float = 1e-9, prefactor_scale: float = 1.0) -> float:
    """int_0^horizon Lambda(y e^{(1/a - 1) u}) du with Lambda from lambda_of."""
    k = setup.drift
    a = setup.a

    def f(u):
        u = np.atleast_1d(u)
        return np.array([lambda_of(setup, sigma, y * np.exp(k * ui), rel_tol=1e-2 * rel_tol)
                         for ui in u]) * prefactor_scale

    if horizon <= 0:
        return 0.0
    # Lambda is flat until y e^{ku} reaches the scale of sigma
    ts = getattr(sigma, "log_scale", 0.0)
    u0 = max(0.0, (ts - np.log(y)) / k) + 1.0 / (a * k)
    if u0 >= horizon:
        return sq.integrate_finite(f, 0.0, float(horizon), rel_tol=rel_tol).value
    head = sq.integrate_finite(f, 0.0, u0, rel_tol=rel_tol).value
    if np.isinf(horizon):
        tail = sq.integrate_semi_infinite(f, u0, sq.Exponential(0.5 * a * k),
                                          rel_tol=rel_tol).value
    else:
        tail = sq.integrate_finite(f, u0, float(horizon), rel_tol=rel_tol).value
    return head + tail


def self_consistency(setup: HomogeneitySetup, sigma, y: float, rel_tol: float = 1e-9,
                     prefactor_scale: float = 1.0) -> float:
    """Relative residual |sigma(y) - exp(-int_0^inf Lambda(y e^{ku}) du)| / sigma(y)."""
    s = float(np.exp(sigma.log_sigma(np.log(y))))
    rhs = np.exp(-damping_exponent(setup, sigma, y, rel_tol=rel_tol,
                                   prefactor_scale=prefactor_scale))
    return abs(s - rhs) / s


def check_lambda_identity(setup: HomogeneitySetup, profile, rel_tol: float = 1e-8,
                          return_raw: bool = False):
    """(a/(1-a)) * 8 pi int_0^inf dy int_R dz |y - z|^-a sigma(y) sigma(z)/(y |z|).

    Evaluated as (a/(1-a)) int_R Lambda(e^t) sigma(e^t) dt with Lambda from
    lambda_of. The contract is a value of 1.
    """
    a = setup.a
    beta = getattr(profile, "beta_hat", np.nan)
    if not np.isfinite(beta) or beta <= 0:
        raise ValueError("profile needs a positive beta_hat")
    t0 = profile.log_scale
    inner_tol = 1e-2 * rel_tol

    def f(t):
        t = np.atleast_1d(t)
        lam = np.array([lambda_of(setup, profile, np.exp(ti), rel_tol=inner_tol) for ti in t])
        return lam * np.exp(profile.log_sigma(t))

    right = sq.integrate_semi_infinite(lambda d: f(t0 + d), 0.0, sq.Exponential(0.5 * a),
                                       rel_tol=rel_tol)
    left = sq.integrate_semi_infinite(lambda d: f(t0 - d), 0.0, sq.Exponential(0.5 * beta),
                                      rel_tol=rel_tol)
    raw = left.value + right.value
    val = a / (1.0 - a) * raw
    if return_raw:
        return val, raw
    return val
