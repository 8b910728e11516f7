import csv
import json
import math

import pytest

from impvf.cli import (EXIT_INFEASIBLE, EXIT_INPUT, EXIT_NONCONVERGED, EXIT_OK, EXIT_VIOLATION,
                       fmt, main)
from impvf.corpus import corpus_path


def P(name):
    return str(corpus_path(name))


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summary(text):
    return dict(line.split(": ", 1) for line in text.splitlines() if ": " in line)


def test_fmt_round_trips():
    for x in (0.1, math.pi, 1e-300, -2.5):
        assert float(fmt(x)) == x


def test_solve_writes_trajectory_sidecars_and_manifest(tmp_path, capsys):
    out = tmp_path / "cosh.csv"
    assert main(["solve", P("cosh"), "--h", "0.01", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    assert len(rows) == 101 and all(r["side"] == "node" for r in rows)
    assert float(rows[-1]["w_0"]) == pytest.approx(math.cosh(1.0), abs=1e-4)
    its = read_csv(tmp_path / "cosh.iterations.csv")
    assert its[0]["ratio"] == "" and len(its) >= 2
    res = {r["quantity"]: r["value"] for r in read_csv(tmp_path / "cosh.residuals.csv")}
    assert res["converged"] == "1" and float(res["integral_defect_sup"]) < 1e-9
    man = json.loads((tmp_path / "cosh.csv.manifest.json").read_text())
    assert man["command"] == "solve" and len(man["outputs"]) == 3
    assert summary(capsys.readouterr().out)["converged"] == "1"


def test_rerun_reproduces_bytes(tmp_path):
    out = tmp_path / "a.csv"
    assert main(["solve", P("rotation_2d"), "--h", "0.02", "--out", str(out)]) == EXIT_OK
    again = tmp_path / "b.csv"
    assert main(["rerun", str(out) + ".manifest.json", "--out", str(again)]) == EXIT_OK
    for suffix in ("", ".iterations", ".residuals"):
        a = (tmp_path / f"a{suffix}.csv").read_bytes()
        b = (tmp_path / f"b{suffix}.csv").read_bytes()
        assert a == b


def test_solve_pure_jump_has_left_and_right_rows(tmp_path):
    out = tmp_path / "j.csv"
    assert main(["solve", P("pure_jump"), "--h", "0.1", "--out", str(out)]) == EXIT_OK
    rows = read_csv(out)
    sides = [(float(r["tau"]), r["side"], float(r["w_0"])) for r in rows if r["side"] != "node"]
    assert sides == [(0.3, "left", 1.0), (0.3, "right", 2.0), (0.6, "left", 2.0), (0.6, "right", 4.0)]
    assert float(rows[-1]["w_0"]) == 4.0


def test_solve_to_stdout(capsys):
    assert main(["solve", P("fredholm_linear"), "--h", "0.05"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "tau,side,w_0"
    assert float(out.splitlines()[-1].split(",")[2]) == pytest.approx(3.0, abs=1e-3)


def test_solve_non_convergence(tmp_path):
    assert main(["solve", P("cosh"), "--h", "0.05", "--max-iter", "2",
                 "--out", str(tmp_path / "x.csv")]) == EXIT_NONCONVERGED


def test_syntax_error_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text(corpus_path("cosh").read_text().replace('G = ["y1[0]"]', 'G = ["y1[0] *"]'))
    assert main(["solve", str(bad)]) == EXIT_INPUT
    err = capsys.readouterr().err
    assert "line 10" in err and "dynamics.G[0]" in err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["solve"])
    assert info.value.code == EXIT_INPUT


def test_missing_file(capsys):
    assert main(["solve", "/nonexistent/problem.toml"]) == EXIT_INPUT


@pytest.mark.parametrize("name,code", [("cosh", EXIT_OK), ("rotation_2d", EXIT_OK),
                                       ("pure_jump", EXIT_INFEASIBLE), ("fredholm_linear", EXIT_INFEASIBLE)])
def test_certify_exit_codes(name, code, capsys):
    assert main(["certify", P(name)]) == code
    s = summary(capsys.readouterr().out)
    assert s["feasible"] == str(int(code == EXIT_OK))


def test_certify_without_lipschitz(tmp_path):
    text = corpus_path("cosh").read_text()
    f = tmp_path / "nolip.toml"
    f.write_text(text[:text.index("[lipschitz]")])
    assert main(["certify", str(f)]) == EXIT_INPUT


def test_certify_gamma_range_and_csv(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["certify", P("cosh"), "--gamma-range", "0.5", "2.0", "--out", str(out)]) == EXIT_OK
    rows = {r["quantity"]: r["value"] for r in read_csv(out)}
    assert float(rows["gamma"]) == pytest.approx(2.0, rel=1e-6)


def test_depend_gronwall_numbers(capsys):
    assert main(["depend", P("cosh"), P("cosh_w0_1_1"), "--mode", "gronwall"]) == EXIT_OK
    s = summary(capsys.readouterr().out)
    assert float(s["measured"]) == pytest.approx(0.1 * math.cosh(1.0), abs=1e-5)
    assert float(s["bound"]) == pytest.approx(0.1 * math.exp(1.5), rel=1e-12)
    assert float(s["tightness"]) == pytest.approx(float(s["measured"]) / float(s["bound"]))


def test_depend_po_and_eps(capsys):
    assert main(["depend", P("cosh"), P("cosh_w0_1_1"), "--mode", "po"]) == EXIT_OK
    s = summary(capsys.readouterr().out)
    assert float(s["distance_bielecki"]) <= float(s["bound"])
    assert main(["depend", P("cosh"), P("cosh_w0_1_1"), "--mode", "eps"]) == EXIT_OK
    s = summary(capsys.readouterr().out)
    assert float(s["eps_base"]) > 0 and float(s["measured"]) <= float(s["bound"])


@pytest.mark.parametrize("mode", ["po", "gronwall", "eps"])
def test_depend_identical_inputs(mode, capsys):
    assert main(["depend", P("cosh"), P("cosh"), "--mode", mode]) == EXIT_OK
    assert float(summary(capsys.readouterr().out)["measured"]) == 0.0


def test_depend_po_infeasible(capsys):
    assert main(["depend", P("fredholm_linear"), P("fredholm_linear"), "--mode", "po"]) == EXIT_INFEASIBLE


def test_depend_schedule_mismatch():
    assert main(["depend", P("cosh"), P("pure_jump")]) == EXIT_INPUT


def test_gronwall_verbatim_failure_and_advisory(tmp_path, capsys):
    f = P("gronwall_mixed_k2_1")
    assert main(["gronwall", f, "--out", str(tmp_path / "g.csv")]) == EXIT_VIOLATION
    assert "mixed bound violated" in capsys.readouterr().out
    assert main(["gronwall", f, "--paper-verbatim-advisory", "--out", str(tmp_path / "g.csv")]) == EXIT_OK
    row = read_csv(tmp_path / "g.csv")[0]
    assert row["mixed_pass"] == "0" and row["mixed_corrected_pass"] == ""
    assert float(row["oracle_end"]) == pytest.approx(3.0, abs=1e-6)


def test_gronwall_tight_file(tmp_path):
    assert main(["gronwall", P("gronwall_tight"), "--out", str(tmp_path / "t.csv")]) == EXIT_OK
    row = read_csv(tmp_path / "t.csv")[0]
    for b in ("volterra_impulse", "volterra_double", "mixed", "mixed_corrected"):
        assert row[f"{b}_pass"] == "1"
        assert float(row[f"{b}_tightness"]) == pytest.approx(1.0, abs=1e-9)


def test_gronwall_random_parallel_is_byte_identical(tmp_path):
    args = ["gronwall", "--random", "12", "--seed", "3", "--paper-verbatim-advisory", "--h", "0.05"]
    assert main(args + ["--out", str(tmp_path / "s.csv")]) == EXIT_OK
    assert main(args + ["--workers", "2", "--out", str(tmp_path / "p.csv")]) == EXIT_OK
    assert (tmp_path / "s.csv").read_bytes() == (tmp_path / "p.csv").read_bytes()
    assert len(read_csv(tmp_path / "s.csv")) == 12


def test_gronwall_argument_checks(capsys):
    assert main(["gronwall"]) == EXIT_INPUT
    assert main(["gronwall", P("gronwall_tight"), "--random", "3"]) == EXIT_INPUT
    assert main(["gronwall", "--random", "0"]) == EXIT_INPUT


def test_rerun_bad_manifest(tmp_path):
    f = tmp_path / "m.json"
    f.write_text("{not json")
    assert main(["rerun", str(f)]) == EXIT_INPUT
