import json
import os
import subprocess
import sys

import pytest

import models
from causalsat.cli import main
from causalsat.scm import scm_to_json


def run_cli(*argv, capsys):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


FORMULA = "sig X:{0,1}; Y:{0,1};\nP([X=1] Y=1) = P([X=1] Y=0)\n"


def test_parse_and_classify(tmp_path, capsys):
    f = write(tmp_path, "f.txt", FORMULA)
    code, out, _ = run_cli("parse", "--formula", f, capsys=capsys)
    assert code == 0
    assert "fragment: comp, causal: yes" in out
    code, out, _ = run_cli("classify", "--formula", f, "--format", "json", capsys=capsys)
    assert code == 0
    rec = json.loads(out.splitlines()[0])
    assert rec == {"causal": True, "fragment": "comp", "record": "classify"}


def test_parse_error_exit_code_and_caret(tmp_path, capsys):
    f = write(tmp_path, "bad.txt", "sig X:{0,1};\nP(X=2) >= P(X=1)\n")
    code, out, err = run_cli("parse", "--formula", f, capsys=capsys)
    assert code == 2
    assert "^" in err and "domain" in err


def test_check_true_false_and_atoms(tmp_path, capsys):
    m = write(tmp_path, "m.json", scm_to_json(models.iid_pair()))
    f_true = write(tmp_path, "t.txt", "P([V1=1] V2=1) = P([V1=1] V2=0)")
    f_false = write(tmp_path, "f.txt", "P([V1=1] V2=1) > P([V1=1] V2=0)")
    code, out, _ = run_cli("check", "--model", m, "--formula", f_true, capsys=capsys)
    assert code == 0 and "result: true" in out and "1/2" in out
    code, out, _ = run_cli("check", "--model", m, "--formula", f_false, capsys=capsys)
    assert code == 1


def test_check_rejects_nonrecursive_model(tmp_path, capsys):
    import itertools
    from causalsat.lang import binary_signature
    from causalsat.rat import rat
    from causalsat.scm import make_scm

    cyc = make_scm(
        binary_signature("A", "B"),
        [("U", ("0", "1"))],
        {("0",): rat(1, 2), ("1",): rat(1, 2)},
        {
            "A": lambda e: "1" if e["B"] == "0" else "0",
            "B": lambda e: "1" if e["A"] == "0" else "0",
        },
    )
    m = write(tmp_path, "cyc.json", scm_to_json(cyc))
    f = write(tmp_path, "f.txt", "P(A=1) >= 0/1")
    code, out, err = run_cli("check", "--model", m, "--formula", f, capsys=capsys)
    assert code == 2
    assert "not recursive" in out
    assert "->" in out  # names the cycle and a witnessing table entry


def test_solve_exit_codes_and_witness_recheck(tmp_path, capsys):
    sat = write(tmp_path, "sat.txt", FORMULA)
    code, out, _ = run_cli(
        "solve", "--formula", sat, "--format", "json",
        "--witness-out", str(tmp_path / "w.json"), capsys=capsys,
    )
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()]
    assert any(r.get("status") == "sat" for r in records)
    # the emitted witness model-checks through the check command
    f2 = write(tmp_path, "again.txt", "P([X=1] Y=1) = P([X=1] Y=0)")
    code, out, _ = run_cli(
        "check", "--model", str(tmp_path / "w.json"), "--formula", f2, capsys=capsys
    )
    assert code == 0

    unsat = write(
        tmp_path,
        "unsat.txt",
        "sig X:{0,1}; Y:{0,1};\n"
        "P([X=1] Y=1 & [X=0] Y=0) > 0 & P([Y=1] X=1 & [Y=0] X=0) > 0\n",
    )
    code, _, _ = run_cli("solve", "--formula", unsat, capsys=capsys)
    assert code == 1

    code, _, _ = run_cli(
        "solve", "--formula", sat, "--mode", "exhaustive", "--budget-certs", "0",
        capsys=capsys,
    )
    assert code == 3


def test_solve_json_output_byte_identical(tmp_path, capsys):
    f = write(tmp_path, "f.txt", FORMULA)
    code1, out1, _ = run_cli("solve", "--formula", f, "--format", "json", "--seed", "7", capsys=capsys)
    code2, out2, _ = run_cli("solve", "--formula", f, "--format", "json", "--seed", "7", capsys=capsys)
    assert (code1, out1) == (code2, out2)


def test_solve_emit_reduction_trace(tmp_path, capsys):
    f = write(tmp_path, "f.txt", FORMULA)
    code, out, _ = run_cli("solve", "--formula", f, "--emit-reduction", capsys=capsys)
    assert code == 0
    assert "order:" in out and "W=0" in out and "psi:" in out


def test_reduce_searches_certificate(tmp_path, capsys):
    f = write(tmp_path, "f.txt", "sig X:{0,1};\nP(X=1) >= P(X=1)\n")
    code, out, _ = run_cli("reduce", "--formula", f, "--format", "json", capsys=capsys)
    assert code == 0
    rec = json.loads(out.splitlines()[0])
    assert rec["record"] == "reduction"
    assert rec["psi"].count("P(") >= 2


def test_reduce_accepts_certificate_file(tmp_path, capsys):
    f = write(tmp_path, "f.txt", "sig X:{0,1};\nP([X=1] X=1) > 0/1\n")
    cert = {
        "order": ["X"],
        "descriptions": [{"[]": {"X": "0"}, "[X=1]": {"X": "1"}}],
    }
    c = write(tmp_path, "c.json", json.dumps(cert))
    code, out, _ = run_cli("reduce", "--formula", f, "--certificate", c, capsys=capsys)
    assert code == 0 and "W=0" in out


def test_emit_smt_writes_file(tmp_path, capsys):
    f = write(tmp_path, "f.txt", "sig A:{0,1}; B:{0,1};\nP(A & B) = P((~A | ~B)) & P(A | B) = P(B)\n")
    out_path = str(tmp_path / "out.smt2")
    code, _, _ = run_cli("emit-smt", "--formula", f, "--out", out_path, capsys=capsys)
    assert code == 0
    text = open(out_path).read()
    assert text.startswith("(set-logic QF_NRA)") and "(check-sat)" in text


def test_emit_smt_causal_reduces_first(tmp_path, capsys):
    f = write(tmp_path, "f.txt", FORMULA)
    code, out, _ = run_cli("emit-smt", "--formula", f, capsys=capsys)
    assert code == 0
    assert "W" in out


def test_entail_command(tmp_path, capsys):
    g = write(tmp_path, "g.txt", "sig Q:{0,1};\nP(Q=1) = 3/4\n")
    f = write(tmp_path, "f.txt", "P(Q=1) >= 1/2")
    code, out, _ = run_cli("entail", "--gamma", g, "--formula", f, capsys=capsys)
    assert code == 0 and "ENTAILS" in out
    f2 = write(tmp_path, "f2.txt", "P(Q=1) >= 4/5")
    code, out, _ = run_cli("entail", "--gamma", g, "--formula", f2, capsys=capsys)
    assert code == 1 and "counterexample" in out


def test_demo_frontdoor_command(capsys):
    code, out, _ = run_cli("demo-frontdoor", "--seed", "0", "--count", "3", capsys=capsys)
    assert code == 0
    assert "3/3 passed" in out


def test_missing_file_is_usage_error(capsys):
    code, _, err = run_cli("parse", "--formula", "/nonexistent/f.txt", capsys=capsys)
    assert code == 2 and "error" in err


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "causalsat", "demo-frontdoor", "--count", "1"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
