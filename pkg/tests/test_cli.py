from __future__ import annotations

import json

import pytest

from semirigid import cli
from semirigid.suites import SUITES, Check, SuiteReport


def test_every_suite_has_a_subcommand():
    parser = cli.build_parser()
    for name in SUITES:
        ns = parser.parse_args([name])
        assert ns.command == name


def test_unknown_flag_exits_2(capsys):
    assert cli.main(["rho-alpha", "--no-such-flag", "1"]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_command_exits_2():
    assert cli.main(["no-such-command"]) == 2


def test_tol_only_where_the_suite_has_one():
    assert cli.main(["collapse-witness", "--tol", "1e-6", "--n-iter", "60"]) == 0
    # a 500-interval blow-up is too coarse to pass; only flag acceptance matters here
    assert cli.main(["denjoy", "--tol", "1e-8", "--cap", "500"]) in (0, 1)
    assert cli.main(["expansion", "--tol", "1e-8"]) == 2


def test_negative_alpha_is_a_usage_error(capsys):
    assert cli.main(["rho-alpha", "--alpha", "-1", "--n", "10"]) == 2
    assert "alpha" in capsys.readouterr().err


def test_rho_alpha_zero_agrees_with_rho0(tmp_path, capsys):
    assert cli.main(["rho-alpha", "--alpha", "0", "--n", "100", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS] alpha=0 equals rho_0" in out
    report = json.loads((tmp_path / "rho-alpha.json").read_text())
    assert report["params"]["alphas"] == [0.0]
    assert report["passed"] is True


def test_artifacts_are_byte_identical_across_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    args = ["chamber-suite", "--n", "50", "--pairs", "100", "--n-times", "11"]
    assert cli.main(args + ["--out", str(a)]) == 0
    assert cli.main(args + ["--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    assert "chamber-suite.json" in names and "chamber-suite_flow_orbit.csv" in names
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# collapse run\nalpha = 0.5\nn-iter = 80\n")
    assert cli.main(["collapse-witness", "--config", str(cfg), "--n-iter", "70", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "collapse-witness.json").read_text())
    assert report["params"]["alpha"] == 0.5
    assert report["params"]["n_iter"] == 70


def test_config_unknown_key_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    assert cli.main(["collapse-witness", "--config", str(cfg)]) == 2


def test_config_missing_file_exits_2(tmp_path):
    assert cli.main(["collapse-witness", "--config", str(tmp_path / "none.cfg")]) == 2


def test_failing_check_exits_1():
    # an impossible tolerance makes the convergence check fail
    assert cli.main(["collapse-witness", "--n-iter", "2", "--tol", "1e-30"]) == 1


def test_tuple_flags_parse_comma_lists(tmp_path):
    assert cli.main(["rho-alpha", "--alphas", "0,1", "--n", "20", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "rho-alpha.json").read_text())
    assert report["params"]["alphas"] == [0.0, 1.0]


def test_report_passed_ignores_info_checks():
    rep = SuiteReport("x", {})
    rep.check("asserted", True, 1.0, "ok")
    rep.check("recorded", False, 2.0, "info", asserted=False)
    assert rep.passed
    assert rep.lines()[1].startswith("[INFO]")
    rep.check("fails", False, 0.0, "no")
    assert not rep.passed
    assert isinstance(rep.get("fails"), Check)
    with pytest.raises(KeyError):
        rep.get("missing")
