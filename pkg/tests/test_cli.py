import json

import pytest

from shearasym import cli


def run(argv, capsys):
    rc = cli.main([str(x) for x in argv])
    out = capsys.readouterr()
    return rc, out.out, out.err


@pytest.mark.parametrize("argv", [
    ["verify", "--a", "1.5"],
    ["verify", "--a", "0"],
    ["verify", "--tol-lambda-identity", "0"],
    ["scales", "--eps-final", "2"],
    ["conserve", "--threads", "0"],
])
def test_invalid_config_exits_2(argv, capsys, tmp_path):
    rc, _, err = run(argv + ["--out-dir", tmp_path], capsys)
    assert rc == 2
    assert "error" in err


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["verify", "--no-such-flag"])
    assert e.value.code == 2


def test_config_file_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"a": 0.5, "colour": "red"}))
    assert run(["scales", "--config", bad], capsys)[0] == 2
    bad.write_text("[1, 2]")
    assert run(["scales", "--config", bad], capsys)[0] == 2
    assert run(["scales", "--config", tmp_path / "missing.json"], capsys)[0] == 2


def test_precedence_flags_over_file(tmp_path):
    cfgf = tmp_path / "c.json"
    cfgf.write_text(json.dumps({"a": 0.3, "eps_final": 1e-6, "tolerances": {"g_mass": 0.1}}))
    args = cli.build_parser().parse_args(["verify", "--config", str(cfgf), "--a", "0.7",
                                          "--tol-u-integral", "0.02"])
    cfg = cli.load_config(args)
    assert cfg.a == 0.7
    assert cfg.eps_final == 1e-6
    assert cfg.tolerances["g_mass"] == 0.1
    assert cfg.tolerances["u_integral"] == 0.02
    assert cfg.tolerances["lambda_identity"] == 5e-3
    default = cli.load_config(cli.build_parser().parse_args(["verify"]))
    assert default.a == 0.5 and default.use_phi_identity is True


def test_scales_csv_deterministic(tmp_path, capsys):
    rc1, out1, _ = run(["scales", "--a", "0.5", "--out-dir", tmp_path / "r1"], capsys)
    rc2, out2, _ = run(["scales", "--a", "0.5", "--out-dir", tmp_path / "r2"], capsys)
    assert rc1 == rc2 == 0 and out1.replace("r1", "r2") == out2
    b1 = (tmp_path / "r1" / "scales_a0.5.csv").read_bytes()
    assert b1 == (tmp_path / "r2" / "scales_a0.5.csv").read_bytes()
    lines = b1.decode().splitlines()
    assert lines[0] == "tau,lambda,eps,log_eps,mass_integral"
    assert len(lines) == 6


def test_conserve_json(tmp_path, capsys):
    rc, out, _ = run(["conserve", "--a", "0.5", "--t", "1", "10", "--no-use-phi-identity",
                      "--out-dir", tmp_path], capsys)
    assert rc == 0
    data = json.loads(out)
    assert data["use_phi_identity"] is False
    for v in data["relative_difference"].values():
        assert abs(v) <= 1e-5
    assert json.loads((tmp_path / "conserve_a0.5.json").read_text()) == data


def test_solve_deterministic(tmp_path, capsys):
    for d in ("s1", "s2"):
        assert run(["solve", "--a", "0.5", "--out-dir", tmp_path / d], capsys)[0] == 0
    for name in ("sigma_a0.5.csv",):
        assert (tmp_path / "s1" / name).read_bytes() == (tmp_path / "s2" / name).read_bytes()


def test_profiles_from_sigma_file(sigma_csv, tmp_path, capsys):
    for d in ("p1", "p2"):
        rc, _, _ = run(["profiles", "--sigma", sigma_csv, "--out-dir", tmp_path / d], capsys)
        assert rc == 0
    for name in ("Omega", "W", "Wtilde", "Hbar", "U"):
        f1 = tmp_path / "p1" / f"{name}_a0.5.csv"
        assert f1.read_bytes() == (tmp_path / "p2" / f"{name}_a0.5.csv").read_bytes()
        assert f1.read_text().splitlines()[0] == f"x,{name}"


def test_evolve_outputs(sigma_csv, tmp_path, capsys):
    rc, _, _ = run(["evolve", "--sigma", sigma_csv, "--tau", "100", "--n-xi2", "5",
                    "--n-zeta", "4", "--xi3-ratio", "0", "1", "--out-dir", tmp_path], capsys)
    assert rc == 0
    g = (tmp_path / "G_a0.5_tau100.csv").read_text().splitlines()
    assert g[0] == "xi1,xi2,log_xi2,log_gap,value,log_value"
    assert len(g) > 1
    row = [float(x) for x in g[1].split(",")]
    # xi1 may round to xi2; the gap is kept in log_gap
    assert 0 <= row[0] <= row[1] and row[3] < row[2] and row[4] >= 0
    f = (tmp_path / "F_a0.5_tau100.csv").read_text().splitlines()
    assert f[0] == "xi1,xi2,xi3,log_xi2,log_gap,value,log_value"
    assert len(f) == 2 * (len(g) - 1) + 1


@pytest.fixture(scope="module")
def verify_run(sigma_csv, tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    rc = cli.main(["verify", "--a", "0.5", "--sigma", str(sigma_csv), "--out-dir", str(out)])
    report = json.loads((out / "report_a0.5.json").read_text(encoding="utf-8"))
    return rc, report


def test_verify_report_schema(verify_run):
    rc, report = verify_run
    assert report["n_checks"] == len(report["checks"]) >= 12
    keys = {"name", "computed", "target", "tolerance", "provenance", "pass"}
    for c in report["checks"]:
        assert keys <= set(c)
        assert c["provenance"] in ("PAPER", "TRIVIAL", "DERIVED")
    assert report["pass"] == all(c["pass"] for c in report["checks"])
    assert report["failed"] == [c["name"] for c in report["checks"] if not c["pass"]]
    assert rc == (0 if report["pass"] else 1)
    assert {"python", "numpy", "scipy"} <= set(report["environment"])
    assert report["config"]["a"] == 0.5


def test_verify_a05_exits_zero(verify_run):
    rc, report = verify_run
    assert rc == 0, f"failing checks: {report['failed']}"
