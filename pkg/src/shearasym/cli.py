"""Command-line front end: shearasym {solve,profiles,scales,evolve,conserve,verify}."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from . import conservation as cons
from . import evolution as evo
from . import io
from . import scales as sc
from .kernels import HomogeneitySetup
from .verify import DEFAULT_TOLERANCES, Pipeline, run_checks


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    a: float = 0.5
    xi_lo: float = -40.0
    xi_hi: float = 40.0
    n: int = 2048
    eps_final: float = 1e-8
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    out_dir: str = "shearasym_out"
    seed: int = 12345
    threads: int = 1
    use_phi_identity: bool = True
    sigma: str | None = None
    tau: list = field(default_factory=lambda: [1e2, 1e3, 1e4, 1e5, 1e6])
    t: list = field(default_factory=lambda: [1.0, 10.0, 100.0])
    n_xi2: int = 41
    n_zeta: int = 21
    xi3_ratio: list = field(default_factory=list)

    def validate(self) -> "RunConfig":
        if not (0.0 < self.a < 1.0):
            raise ConfigError(f"a must lie in (0, 1), got {self.a}")
        if not self.xi_lo < self.xi_hi or self.n < 16:
            raise ConfigError("need xi_lo < xi_hi and n >= 16")
        if not (0.0 < self.eps_final < 1.0):
            raise ConfigError("eps_final must lie in (0, 1)")
        for k, v in self.tolerances.items():
            if k not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown check {k!r} in tolerances")
            if not (isinstance(v, (int, float)) and v > 0):
                raise ConfigError(f"tolerance for {k} must be > 0, got {v}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if any(x <= 0 for x in self.tau) or any(x <= 0 for x in self.t):
            raise ConfigError("tau and t values must be positive")
        if self.n_xi2 < 1 or self.n_zeta < 1:
            raise ConfigError("sample counts must be positive")
        return self

    def echo(self) -> dict:
        return asdict(self)


_SCALAR_FLAGS = ("a", "xi_lo", "xi_hi", "n", "eps_final", "out_dir", "seed", "threads",
                 "use_phi_identity", "sigma", "tau", "t", "n_xi2", "n_zeta", "xi3_ratio")


def load_config(args) -> RunConfig:
    """Defaults, then the JSON file, then explicit flags."""
    values = RunConfig().echo()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(data) - set(values)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        tols = data.pop("tolerances", {})
        values.update(data)
        values["tolerances"].update(tols)
    for k in _SCALAR_FLAGS:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    for k in DEFAULT_TOLERANCES:
        v = getattr(args, "tol_" + k, None)
        if v is not None:
            values["tolerances"][k] = v
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def _pipeline(cfg: RunConfig, verbose=False) -> Pipeline:
    log = (lambda s: print(f"  eps={s['epsilon']:.3g} iters={s.get('iterations', '?')}"
                           f" residual={s.get('residual', float('nan')):.3g}")) if verbose else None
    return Pipeline(cfg.a, cfg.eps_final, cfg.xi_lo, cfg.xi_hi, cfg.n, cfg.sigma, log)


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


# ---------------------------------------------------------------------------
# subcommands

def cmd_solve(cfg: RunConfig) -> int:
    pipe = Pipeline(cfg.a, cfg.eps_final, cfg.xi_lo, cfg.xi_hi, cfg.n)
    s = pipe.sigma
    path = _out(cfg, f"sigma_a{cfg.a:g}.csv")
    s.to_csv(path)
    print(f"a={cfg.a:g} beta_hat={s.beta_hat:.10g} scale={s.scale:.10g} "
          f"residual={s.residual_sup:.3g} time={pipe.solve_seconds:.1f}s")
    print(f"wrote {path}")
    return 0


def cmd_profiles(cfg: RunConfig) -> int:
    pipe = _pipeline(cfg)
    P = pipe.profiles
    for name, curve in P.curves().items():
        path = _out(cfg, f"{name}_a{cfg.a:g}.csv")
        curve.to_csv(path)
        print(f"wrote {path}")
    return 0


def cmd_scales(cfg: RunConfig) -> int:
    m = sc.ScaleModel.from_setup(HomogeneitySetup(cfg.a))
    taus = np.asarray(sorted(cfg.tau), dtype=float)
    lam = sc.lambda_tau(m, taus)
    leps = sc.log_eps_tau(m, taus)
    mass = []
    for tau in taus:
        try:
            mass.append(sc.mass_integral(m, tau))
        except ValueError:
            mass.append(np.nan)
    path = _out(cfg, f"scales_a{cfg.a:g}.csv")
    io.write_csv(path, ["tau", "lambda", "eps", "log_eps", "mass_integral"],
                 [taus, lam, np.exp(leps), leps, mass])
    print(f"C0={m.c0:.17g}")
    print("tau,lambda,eps,mass_integral")
    for row in zip(taus, lam, np.exp(leps), mass):
        print(",".join(io.fmt(x) for x in row))
    print(f"wrote {path}")
    return 0


def cmd_evolve(cfg: RunConfig) -> int:
    pipe = _pipeline(cfg)
    sol = pipe.solution
    a = cfg.a
    zeta_u = np.logspace(-4, 4, cfg.n_zeta)
    for tau in cfg.tau:
        le = float(sc.log_eps_tau(sol.scales, tau))
        ws = np.linspace(le, le + tau, cfg.n_xi2)
        rows = evo.sample_G(sol, tau, ws, zeta_u)
        w, v, lg = rows[:, 0], rows[:, 1], rows[:, 2]
        xi2 = np.exp(w)
        xi1 = xi2 * -np.expm1(v - w)
        path = _out(cfg, f"G_a{a:g}_tau{tau:g}.csv")
        io.write_csv(path, ["xi1", "xi2", "log_xi2", "log_gap", "value", "log_value"],
                     [xi1, xi2, w, v, np.exp(lg), lg])
        print(f"wrote {path} ({len(w)} rows)")
        if cfg.xi3_ratio:
            cols = [[] for _ in range(7)]
            for t in cfg.xi3_ratio:
                lf = evo.log_F(sol, w, v, t, tau)
                for c, x in zip(cols, (xi1, xi2, t * xi2, w, v, np.exp(lf), lf)):
                    c.extend(np.broadcast_to(x, w.shape))
            path = _out(cfg, f"F_a{a:g}_tau{tau:g}.csv")
            io.write_csv(path, ["xi1", "xi2", "xi3", "log_xi2", "log_gap", "value", "log_value"],
                         cols)
            print(f"wrote {path} ({len(cols[0])} rows)")
    return 0


def cmd_conserve(cfg: RunConfig) -> int:
    setup = HomogeneitySetup(cfg.a)
    T = cons.gaussian_pair()
    loss = cons.reduced_loss_mass(setup, T)
    gains = {io.fmt(t): cons.reduced_gain_mass(setup, T, t, cfg.use_phi_identity) for t in cfg.t}
    out = {
        "a": cfg.a,
        "use_phi_identity": cfg.use_phi_identity,
        "loss": loss,
        "gain": gains,
        "relative_difference": {k: (g - loss) / loss for k, g in gains.items()},
    }
    io.write_json(_out(cfg, f"conserve_a{cfg.a:g}.json"), out)
    print(io.dumps(out))
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    pipe = _pipeline(cfg)
    t = time.perf_counter()
    checks = run_checks(pipe, cfg.tolerances, cfg.use_phi_identity, cfg.seed, log=print)
    failed = [c.name for c in checks if not c.passed]
    report = {
        "schema": "shearasym.verification/1",
        "version": __version__,
        "pass": not failed,
        "n_checks": len(checks),
        "failed": failed,
        "checks": [c.as_dict() for c in checks],
        "environment": io.environment_stamp(),
        "config": cfg.echo(),
        "elapsed_seconds": time.perf_counter() - t,
    }
    path = _out(cfg, f"report_a{cfg.a:g}.json")
    io.write_json(path, report)
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed; report in {path}")
    if failed:
        print("FAILED: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


COMMANDS = {
    "solve": (cmd_solve, "solve the cutoff equation and write sigma"),
    "profiles": (cmd_profiles, "build Omega, W, W~, Hbar, U and write them"),
    "scales": (cmd_scales, "tabulate lambda, eps and the mass integral against tau"),
    "evolve": (cmd_evolve, "sample G (and F) at given tau values"),
    "conserve": (cmd_conserve, "reduced gain/loss mass balance for Gaussian test densities"),
    "verify": (cmd_verify, "run the verification suite and write a JSON report"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--a", type=float, help="homogeneity exponent in (0,1) (default 0.5)")
    g.add_argument("--config", help="JSON config file; flags override its values")
    g.add_argument("--out-dir", dest="out_dir", help="output directory")
    g.add_argument("--eps-final", dest="eps_final", type=float,
                   help="last positive eps of the continuation (default 1e-8)")
    g.add_argument("--xi-lo", dest="xi_lo", type=float)
    g.add_argument("--xi-hi", dest="xi_hi", type=float)
    g.add_argument("--n", type=int, help="sigma grid size")
    g.add_argument("--sigma", help="load sigma from this CSV instead of solving")
    g.add_argument("--threads", type=int, help="parallelism degree (outputs do not depend on it)")
    g.add_argument("--seed", type=int)
    g.add_argument("--use-phi-identity", dest="use_phi_identity",
                   action=argparse.BooleanOptionalAction, default=None,
                   help="use int_0^1 Phi = sqrt2 pi in the gain term")
    g.add_argument("--tau", type=float, nargs="+")
    g.add_argument("--t", type=float, nargs="+", help="times for conserve")
    g.add_argument("--n-xi2", dest="n_xi2", type=int)
    g.add_argument("--n-zeta", dest="n_zeta", type=int)
    g.add_argument("--xi3-ratio", dest="xi3_ratio", type=float, nargs="+",
                   help="xi3/xi2 values at which evolve also samples F")
    tg = common.add_argument_group("tolerances")
    for k, v in DEFAULT_TOLERANCES.items():
        tg.add_argument("--tol-" + k.replace("_", "-"), dest="tol_" + k, type=float,
                        metavar="TOL", help=f"default {v:g}")

    p = argparse.ArgumentParser(prog="shearasym", description=__doc__)
    p.add_argument("--version", action="version", version=f"shearasym {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=helptext)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        print(f"shearasym {args.command}: error: {exc}", file=sys.stderr)
        return 2
    fn = COMMANDS[args.command][0]
    return fn(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
