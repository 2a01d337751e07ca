"""Acceptance criteria 1-13 and the negative control.

Each test prints one PASS/FAIL line. Tolerances are pinned here and do not
follow the package defaults.
"""

import numpy as np
import pytest

from shearasym import evolution as evo
from shearasym import scales as sc
from shearasym import verify as V
from shearasym.kernels import HomogeneitySetup

from conftest import A_VALUES

TOL = {
    "phi_integral": 1e-8,
    "q_large": 1e-2,
    "q_small_log": 1e-2,
    "cutoff_residual": 1e-10,
    "cutoff_runtime": 600.0,
    "lambda_identity": 5e-3,
    "beta_lower": 1e-3,
    "beta_agreement": 2e-2,
    "self_consistency": 1e-5,
    "omega_large_flat": 2e-2,
    "omega_small_limit": 1e-2,
    "omega_small_slope": 5e-2,
    "w_integral": 1e-2,
    "w0": 1e-2,
    "hbar_routes": 1e-3,
    "hbar_norm": 1e-2,
    "u_integral": 1.5e-2,
    "c0_closed": 1e-14,
    "delay_residual": 1e-300,
    "mass_integral": 5e-3,
    "ratio_identity": 1e-14,
    "g_mass": 5e-2,
    "fg_marginal": 2e-2,
    "gain_loss": 1e-5,
    "gain_t_independence": 1e-6,
    "phi_inner": 1e-8,
    "angular_identity": 1e-12,
    "negative_control": 0.1,
}


@pytest.fixture
def verdict(capsys):
    def _verdict(label, checks):
        bad = [c for c in checks if not c.passed]
        status = "PASS" if not bad else "FAIL"
        info = "; ".join(f"{c.name}={c.computed:.4g}" for c in (bad or checks)[:6])
        with capsys.disabled():
            print(f"\n{label}: {status} ({info})")
        assert not bad, "\n".join(c.line() for c in bad)
    return _verdict


def _tag(checks, a):
    for c in checks:
        c.name = f"{c.name}[a={a}]"
    return checks


def test_criterion_01_phi_integral(verdict):
    verdict("criterion 1 (int Phi = sqrt2 pi)", V.check_phi_integral(TOL))


def test_criterion_02_q_asymptotics(verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_q(HomogeneitySetup(a), TOL), a)
    verdict("criterion 2 (Q asymptotics)", checks)


def test_criterion_03_cutoff_solve(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_cutoff(pipelines(a), TOL), a)
    total = sum(pipelines.seconds[a] for a in A_VALUES)
    checks.append(V.Check("cutoff_runtime_total", total, 0.0, TOL["cutoff_runtime"], "PAPER",
                          "max", "seconds, kernel tables included"))
    verdict("criterion 3 (cutoff solve)", checks)


def test_criterion_04_lambda_identity(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_lambda_identity_step(pipelines(a), TOL), a)
    verdict("criterion 4 (collision-frequency identity)", checks)


def test_criterion_05_beta(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_beta(pipelines(a), TOL), a)
    verdict("criterion 5 (beta bound and two routes)", checks)


def test_criterion_06_self_consistency(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_self_consistency(pipelines(a), TOL), a)
    verdict("criterion 6 (damping self-consistency)", checks)


def test_criterion_07_omega(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_omega(pipelines(a), TOL), a)
    verdict("criterion 7 (Omega asymptotics)", checks)


def test_criterion_08_w_chain(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_w_chain(pipelines(a), TOL), a)
    verdict("criterion 8 (W and W0)", checks)


def test_criterion_09_hbar(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_hbar(pipelines(a), TOL, n=50), a)
    verdict("criterion 9 (Hbar routes and normalisation)", checks)


def test_criterion_10_u(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_u(pipelines(a), TOL), a)
    verdict("criterion 10 (int U = a)", checks)


def test_criterion_11_scales(verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_scales(HomogeneitySetup(a), TOL), a)
    verdict("criterion 11 (scale laws)", checks)


def test_criterion_12_evolution(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_characteristics(a, TOL), a)
        sol = pipelines(a).solution
        m3, m4 = evo.G_mass(sol, 1e3), evo.G_mass(sol, 1e4)
        checks += _tag([V.Check("g_mass", m3, 1.0, TOL["g_mass"], "PAPER"),
                        V.Check("g_mass_improves", abs(m3 - 1) - abs(m4 - 1), 0.0, 0.0,
                                "PAPER", "min")], a)
    sol = pipelines(0.5).solution
    le = float(sc.log_eps_tau(sol.scales, 1e3))
    dev = 0.0
    for w in le + np.linspace(0.05, 0.95, 20) * 1e3:
        num, ana = evo.marginal_check_log(sol, w, 1e3)
        dev = max(dev, abs(num / ana - 1))
    checks.append(V.Check("fg_marginal[a=0.5]", dev, 0.0, TOL["fg_marginal"], "PAPER", "max"))
    verdict("criterion 12 (evolution)", checks)


def test_criterion_13_conservation(verdict):
    verdict("criterion 13 (gain/loss mass balance)",
            V.check_conservation(HomogeneitySetup(0.5), TOL))


def test_negative_control(pipelines, verdict):
    checks = []
    for a in A_VALUES:
        checks += _tag(V.check_negative_control(pipelines(a), TOL), a)
    verdict("negative control (sigma x 0.9 must be detected)", checks)
