import json

import pytest

from modver.cli import main

QS, QP = "corpus/quicksort.whp", "corpus/quicksort.proofs"


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_run_sorts(capsys):
    code, out = run(capsys, "run", QS, "--input", "a=[3,1,2]; x=0; y=2")
    assert code == 0
    assert out.startswith("a=[1, 2, 3]")


def test_run_json_and_trace(capsys):
    code, out = run(capsys, "run", QS, "--input", "a=[2,1]; x=0; y=1", "--trace", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == "modver.run/1" and doc["outcome"] == "terminated"
    assert [r["step"] for r in doc["trace"]] == list(range(1, len(doc["trace"]) + 1))
    assert doc["final"].startswith("a=[1, 2]")


def test_run_out_of_fuel(capsys):
    code, out = run(capsys, "run", QS, "--input", "a=[3,2,1,0]; x=0; y=3", "--fuel", "10")
    assert code == 3 and "out of fuel" in out


def test_bad_input_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.whp"
    bad.write_text("main :: x := ")
    assert main(["run", str(bad)]) == 2
    assert main(["run", QS, "--input", "a=[1,"]) == 2
    assert main(["check", QS, str(tmp_path / "missing.proofs")]) == 2


def test_check_only_json(capsys):
    code, out = run(capsys, "check", QS, QP, "--only", "P1,Q2", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == "modver.report/1" and doc["status"] == "VERIFIED(window)"
    assert [c["name"] for c in doc["contracts"]] == ["P1", "Q2"]
    assert [v["id"] for v in doc["vcs"]] == [f"vc_{k:04d}" for k in range(1, len(doc["vcs"]) + 1)]
    assert set(doc["window"]) == {"int_lo", "int_hi", "array_max_len", "value_lo", "value_hi"}


def test_only_by_stage(capsys):
    code, out = run(capsys, "vcs", QS, QP, "--only", "SP1", "--format", "json")
    doc = json.loads(out)
    assert doc["schema"] == "modver.vcs/1" and {v["contract"] for v in doc["vcs"]} == {"P1"}


def test_unknown_only_is_rejected(capsys):
    assert main(["check", QS, QP, "--only", "NOPE"]) == 2


def test_refuted_exit_1(capsys, tmp_path):
    prog = tmp_path / "p.whp"
    prog.write_text("Inc(x) :: y := x + 1\nmain :: Inc(0)")
    proofs = tmp_path / "p.proofs"
    proofs.write_text("contract C partial on Inc(x) pre { 0 <= x } post { 2 <= y }\n"
                      "outline C { { 0 <= x } y := x + 1 { 2 <= y } }\nstage SC: C\n")
    code, out = run(capsys, "check", str(prog), str(proofs))
    assert code == 1 and "counterexample" in out and "status: REFUTED" in out


def test_fuzz_cli(capsys):
    code, out = run(capsys, "fuzz", QS, QP, "--only", "P1", "--trials", "30")
    assert code == 0 and "no violations" in out
    code, out = run(capsys, "fuzz", QS, QP, "--only", "P1", "--trials", "30", "--self-test", "--format", "json")
    doc = json.loads(out)
    assert code == 1 and doc["schema"] == "modver.fuzz/1"
    assert len(doc["triples"][-1]["violations"]) == 30


def test_corpus_list_show(capsys):
    code, out = run(capsys, "corpus", "list")
    assert code == 0 and "quicksort" in out and "mutations" in out
    code, out = run(capsys, "corpus", "show", "mutations")
    assert code == 0 and "mutant drop-swap" in out
    assert main(["corpus", "show", "nope"]) == 2


def test_corpus_name_clash(capsys):
    assert main(["corpus", "check", "name-clash-negative"]) == 2


def test_help(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["check", "--help"])
    assert exc.value.code == 0
