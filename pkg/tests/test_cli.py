import json

import pytest

from lorentzlab import cli, report


def run(args, capsys):
    code = cli.run(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_weight_bstar_constant_one(capsys):
    code, out, _ = run(["check-weight", "--w", '{"kind":"power","exponent":0}', "--class", "bstar"], capsys)
    assert code == 0
    assert out.strip() == "bstar: PASS constant 1.0"


@pytest.mark.parametrize("args,field", [
    (["--p", "0"], "'p'"),
    (["--n", "1000"], "'n'"),
    (["--K", "2"], "'K'"),
    (["--w", "power:-3"], "'w'"),
])
def test_config_errors_exit_one(args, field, capsys):
    code, _, err = run(["check-weight", "--class", "bp"] + args, capsys)
    assert code == 1
    assert field in err


def test_config_file_line_diagnostics(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text('{\n  "p": 2,\n  "n": 12\n}\n')
    code, _, err = run(["check-weight", "--class", "bp", "--config", str(cfg)], capsys)
    assert code == 1 and "line 3" in err and "'n'" in err
    cfg.write_text('{"p": 2,\n "K": }')
    code, _, err = run(["check-weight", "--class", "bp", "--config", str(cfg)], capsys)
    assert code == 1 and "line 2" in err


def test_config_file_sets_fields(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"w": {"kind": "power", "exponent": 2.0}, "p": 2.0, "K": 6}))
    code, out, _ = run(["check-weight", "--class", "bp", "--config", str(cfg)], capsys)
    assert code == 0 and "FAIL" in out


def test_usage_error_exits_one(capsys):
    code, _, err = run(["check-weight", "--class", "nope"], capsys)
    assert code == 1


def test_verdict_fixture_red_flag(tmp_path, capsys):
    bad = tmp_path / "v.json"
    bad.write_text(json.dumps({"i": "PASS", "ii": "FAIL-GROWTH", "iii": "PASS", "H": "PASS"}))
    code, out, _ = run(["verify-theorem", "--verdicts", str(bad)], capsys)
    assert code == 2 and "red flag" in out
    good = tmp_path / "g.json"
    good.write_text(json.dumps({"i": "PASS", "ii": "FAIL-GROWTH", "iii": "PASS", "H": "FAIL-GROWTH"}))
    assert run(["verify-theorem", "--verdicts", str(good)], capsys)[0] == 0
    junk = tmp_path / "j.json"
    junk.write_text(json.dumps({"H": "MAYBE"}))
    assert run(["verify-theorem", "--verdicts", str(junk)], capsys)[0] == 1


def test_verify_theorem_consistent(tmp_path, capsys):
    out = tmp_path / "r.json"
    code, text, _ = run(["verify-theorem", "--u", "power:5", "--w", "power:0", "--p", "2", "--K", "6",
                         "--out", str(out)], capsys)
    assert code == 0 and "consistent" in text
    rep = json.loads(out.read_text())
    assert rep["result"]["consistent"] and rep["resolution"] == 2 ** 12
    assert rep["result"]["cotlar_residual"] < 1e-2


def test_probe_operator_and_csv(tmp_path, capsys):
    out, csv = tmp_path / "p.json", tmp_path / "p.csv"
    code, text, _ = run(["probe-operator", "--T", "M", "--p", "1", "--K", "4", "--families", "a,b",
                         "--out", str(out), "--csv", str(csv), "--no-timestamp"], capsys)
    assert code == 0 and text.startswith("M: PASS")
    rows = report.read_csv(csv)
    assert {r["family"] for r in rows} == {"a", "b"}
    assert "timestamp" not in json.loads(out.read_text())


def test_probe_operator_unknown_family(capsys):
    assert run(["probe-operator", "--families", "a,z"], capsys)[0] == 1


def test_lpq_requires_q(capsys):
    assert run(["lpq", "--p", "2"], capsys)[0] == 1
    code, out, _ = run(["lpq", "--p", "2", "--q", "2", "--K", "4"], capsys)
    assert code == 0 and out.startswith("lpq case a")


def test_emit_plot(tmp_path, capsys):
    out = tmp_path / "r.json"
    run(["check-weight", "--class", "delta2", "--w", "power:1", "--K", "5", "--out", str(out)], capsys)
    code, text, _ = run(["emit-plot", "--report", str(out)], capsys)
    assert code == 0
    assert (tmp_path / "r.csv").exists() and (tmp_path / "r.png").stat().st_size > 0
    assert len(report.read_csv(tmp_path / "r.csv")) > 0


def test_emit_plot_missing_report(tmp_path, capsys):
    assert run(["emit-plot", "--report", str(tmp_path / "none.json")], capsys)[0] == 1


def test_help_documents_csv_columns(capsys):
    with pytest.raises(SystemExit):
        cli.run(["probe-operator", "--help"])
    assert "CSV columns" in capsys.readouterr().out
