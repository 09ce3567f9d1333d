"""Command-line behaviour: exit codes, report shapes, determinism."""
import json

import numpy as np
import pytest

from saddletail import __version__, cli
from saddletail.flow import flow
from saddletail.params import SaddleParams

BASE = {"a0": 1.0, "a2": 1.0, "b0": 1.0, "b2": 2.0, "kappa": 2}


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(BASE))
    return str(path)


def run_cli(*args):
    try:
        return cli.main(list(args))
    except SystemExit as exc:  # argparse --version/--help path
        return int(exc.code or 0)


def csv_body(text):
    lines = text.strip().split("\n")
    comments = [l for l in lines if l.startswith("#")]
    rest = [l for l in lines if not l.startswith("#")]
    return comments, rest[0], [r.split(",") for r in rest[1:]]


def test_version_flag(capsys):
    assert run_cli("--version") == 0
    assert capsys.readouterr().out.strip() == __version__


def test_missing_config_is_usage_error(capsys):
    assert run_cli("derive") == 1
    assert "usage error" in capsys.readouterr().err


def test_unknown_subcommand(capsys):
    assert run_cli("frobnicate") == 1


def test_malformed_config_is_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ nope")
    assert run_cli("derive", "--config", str(bad)) == 1
    assert "config parse error" in capsys.readouterr().err


def test_degenerate_delta_exits_2(tmp_path, capsys):
    doc = dict(BASE, b2=1.0)
    path = tmp_path / "degen.json"
    path.write_text(json.dumps(doc))
    assert run_cli("derive", "--config", str(path)) == 2
    assert "DegenerateDelta" in capsys.readouterr().err


def test_unknown_config_key_exits_2(tmp_path, capsys):
    path = tmp_path / "junk.json"
    path.write_text(json.dumps(dict(BASE, verbosity=3)))
    assert run_cli("derive", "--config", str(path)) == 2
    assert "verbosity" in capsys.readouterr().err


def test_derive_report_shape(config_path, capsys):
    assert run_cli("derive", "--config", config_path) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["version"] == __version__
    assert len(doc["config_sha256"]) == 64
    assert doc["derived_constants"]["beta2"] == 0.75
    assert doc["derived_constants"]["measure_class"] == "InfiniteSRB"
    assert doc["asymptotic_coeffs"]["xi1"] == pytest.approx(4.5, rel=1e-12)
    assert doc["tail_coeffs"]["C0"] == pytest.approx(1.00128785552, rel=1e-9)


def test_asymptotics_report(config_path, capsys):
    assert run_cli("asymptotics", "--config", config_path) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["beta0"] == 1.0 and doc["beta2"] == 0.75
    assert doc["beta_star"] == 0.25
    assert doc["xi1"] == pytest.approx(4.5, rel=1e-12)
    assert doc["omega1"] == pytest.approx(6.0, rel=1e-12)
    assert doc["H"][1] == 0.0 and doc["Hhat"][1] == 0.0


def test_flow_final_state_matches_library(config_path, capsys):
    assert (
        run_cli("flow", "--config", config_path, "--x0", "0.1", "--y0", "0.3", "--t", "2.0")
        == 0
    )
    doc = json.loads(capsys.readouterr().out)
    end = flow(SaddleParams(**BASE), (0.1, 0.3), 2.0)
    assert doc["x"] == pytest.approx(end.x, rel=1e-9)
    assert doc["y"] == pytest.approx(end.y, rel=1e-9)


def test_flow_record_csv(config_path, capsys):
    code = run_cli(
        "flow", "--config", config_path, "--x0", "0.1", "--y0", "0.3", "--t", "1.0", "--record"
    )
    assert code == 0
    comments, header, rows = csv_body(capsys.readouterr().out)
    assert comments[0] == f"# version={__version__}"
    assert comments[1].startswith("# config_sha256=")
    assert header == "t,x,y"
    assert float(rows[0][0]) == 0.0 and float(rows[-1][0]) == 1.0


def test_exit_time_on_section_is_zero(config_path, capsys):
    zeta0 = 8.0 ** -0.5
    assert run_cli("exit-time", "--config", config_path, "--xi", repr(zeta0)) == 0
    _, header, rows = csv_body(capsys.readouterr().out)
    assert header == "xi,eta,T,omega"
    assert float(rows[0][2]) == 0.0
    assert float(rows[0][3]) == float(rows[0][1])  # omega == eta at T = 0


def test_exit_time_inverse_gap(config_path, capsys):
    assert run_cli("exit-time", "--config", config_path, "--T", "1e4") == 0
    _, header, rows = csv_body(capsys.readouterr().out)
    assert header == "T,eta,xi_exact,xi_expansion,relative_gap"
    assert float(rows[0][4]) <= 1e-3


def test_exit_time_sweep_monotone(config_path, capsys):
    ts = [str(v) for v in (10.0, 100.0, 1000.0, 10_000.0)]
    assert run_cli("exit-time", "--config", config_path, "--T", *ts) == 0
    _, _, rows = csv_body(capsys.readouterr().out)
    xi = [float(r[2]) for r in rows]
    assert all(a > b for a, b in zip(xi, xi[1:]))


def test_exit_time_json_format(config_path, capsys):
    assert (
        run_cli("exit-time", "--config", config_path, "--T", "100", "--format", "json") == 0
    )
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0]["T"] == 100.0
    assert 0.0 < doc["rows"][0]["xi_exact"] < 8.0 ** -0.5


def test_exit_time_needs_exactly_one_mode(config_path, capsys):
    assert run_cli("exit-time", "--config", config_path) == 1
    assert run_cli("exit-time", "--config", config_path, "--xi", "0.1", "--T", "10") == 1


def test_exit_time_xi_out_of_range(config_path, capsys):
    assert run_cli("exit-time", "--config", config_path, "--xi", "0.9") == 2
    assert "validation error" in capsys.readouterr().err


def test_tail_semi_fit(config_path, capsys):
    code = run_cli(
        "tail", "--config", config_path,
        "--n-min", "50", "--n-max", "2000", "--per-decade", "16",
        "--fit-lo", "100", "--format", "json",
    )
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mode"] == "semi"
    assert abs(doc["fit"]["beta_hat"] / 0.75 - 1.0) <= 0.02
    assert doc["table"]["stderr"] is None
    assert doc["table"]["mass"] == sorted(doc["table"]["mass"], reverse=True)


def test_tail_csv_comments(config_path, capsys):
    code = run_cli(
        "tail", "--config", config_path,
        "--n-min", "50", "--n-max", "500", "--per-decade", "8",
    )
    assert code == 0
    comments, header, rows = csv_body(capsys.readouterr().out)
    assert any(c.startswith("# mode=semi") for c in comments)
    assert any(c.startswith("# fit ") for c in comments)
    assert header == "n,mass,stderr"
    assert rows[0][2] == ""  # no stderr column for the semi route


def test_tail_mc_needs_seed(config_path, capsys):
    code = run_cli(
        "tail", "--config", config_path, "--mode", "mc",
        "--N", "1000", "--n-min", "5", "--n-max", "50", "--per-decade", "8",
    )
    assert code == 2
    assert "SeedRequired" in capsys.readouterr().err


def test_tail_mc_deterministic(config_path, tmp_path):
    out = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for path in out:
        code = run_cli(
            "tail", "--config", config_path, "--mode", "mc", "--seed", "31",
            "--N", "2000", "--n-min", "5", "--n-max", "50", "--per-decade", "8",
            "--out", str(path),
        )
        assert code == 0
    assert out[0].read_bytes() == out[1].read_bytes()


def test_renewal_report(config_path, capsys):
    assert run_cli("renewal", "--config", config_path, "--N", "400", "--format", "json") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["mixing"]["beta"] == 0.75
    assert doc["mixing"]["q"] == 2
    assert doc["mixing"]["d0"] == pytest.approx(
        np.sin(0.75 * np.pi) / (np.pi * doc["mixing"]["C0"]), rel=1e-12
    )
    assert len(doc["u"]) == 400 and len(doc["p"]) == 400
    # mass conservation of the embedded return distribution
    assert sum(doc["p"]) <= 1.0 + 1e-9


def test_renewal_csv_comment(config_path, capsys):
    assert run_cli("renewal", "--config", config_path, "--N", "50") == 0
    comments, header, rows = csv_body(capsys.readouterr().out)
    assert any(c.startswith("# beta=0.75 d0=") for c in comments)
    assert header == "n,p,u,scaled_u"
    assert len(rows) == 50


def test_verify_subset_passes(config_path, capsys):
    assert run_cli("verify", "--config", config_path, "--criteria", "1,9") == 0
    captured = capsys.readouterr()
    doc = json.loads(captured.out)
    assert doc["all_pass"] is True
    assert [c["id"] for c in doc["criteria"]] == [1, 9]
    assert "criterion 01 PASS" in captured.err
    assert "criterion 09 PASS" in captured.err


def test_verify_rejects_bad_criteria(config_path, capsys):
    assert run_cli("verify", "--config", config_path, "--criteria", "1,42") == 1
    assert run_cli("verify", "--config", config_path, "--criteria", "one") == 1


def test_verify_builtin_default_config(capsys):
    assert run_cli("verify", "--criteria", "9") == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["seed"] == 20260817


def test_numerical_failure_exits_3(tmp_path, capsys):
    doc = dict(BASE, integrator={"max_steps": 50})
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc))
    code = run_cli("flow", "--config", str(path), "--x0", "0.1", "--y0", "0.3", "--t", "50.0")
    assert code == 3
    assert "numerical failure: StepLimitExceeded" in capsys.readouterr().err


def test_out_file_leaves_stdout_empty(config_path, tmp_path, capsys):
    target = tmp_path / "report.json"
    assert run_cli("derive", "--config", config_path, "--out", str(target)) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(target.read_text())["derived_constants"]["beta0"] == 1.0


def test_seed_flag_overrides_config(tmp_path, capsys):
    doc = dict(BASE, seed=1)
    path = tmp_path / "seeded.json"
    path.write_text(json.dumps(doc))
    code = run_cli(
        "tail", "--config", str(path), "--mode", "mc", "--seed", "2",
        "--N", "1200", "--n-min", "5", "--n-max", "50", "--per-decade", "8",
        "--format", "json",
    )
    assert code == 0
    with_flag = json.loads(capsys.readouterr().out)
    code = run_cli(
        "tail", "--config", str(path), "--mode", "mc",
        "--N", "1200", "--n-min", "5", "--n-max", "50", "--per-decade", "8",
        "--format", "json",
    )
    assert code == 0
    with_config_seed = json.loads(capsys.readouterr().out)
    assert with_flag["table"]["mass"] != with_config_seed["table"]["mass"]
