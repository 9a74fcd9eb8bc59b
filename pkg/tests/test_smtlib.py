import shutil
import subprocess
from pathlib import Path

import pytest

from modver import syntax as S
from modver.cli import main
from modver.parser import parse_expr
from modver.proof import VC
from modver.smtlib import EmitError, emit_smtlib, symbol, vc_filename, write_scripts

GOLDEN = Path(__file__).parent / "golden"
HAVE_Z3 = shutil.which("z3") is not None


def vc(h, c):
    return VC(parse_expr(h), parse_expr(c), "test")


def z3(text: str, tmp_path) -> str:
    p = tmp_path / "q.smt2"
    p.write_text(text)
    return subprocess.run(["z3", "-T:60", str(p)], capture_output=True, text=True).stdout


def test_symbols():
    assert symbol("x") == "x"
    assert symbol("x'") == "|x'|"
    assert symbol("and") == "|and|"


def test_script_shape():
    text = emit_smtlib(vc("true", "max(y - x, 0) >= 0"))
    assert text.endswith("(check-sat)\n")
    assert "(declare-const x Int)" in text and "(assert (not " in text


def test_stable_output():
    v = vc("perm(a, b, [0:n]) and sorted(b[0:n])", "sorted(a[0:n])")
    assert emit_smtlib(v) == emit_smtlib(v)


def test_array_existential_rejected():
    with pytest.raises(EmitError):
        emit_smtlib(VC(S.TRUE, S.ArrayExists("b", parse_expr("b[0] = 1")), "test"))


def test_file_names(tmp_path):
    paths = write_scripts([vc("true", "0 <= x * x"), vc("x > 0", "x > 1")], tmp_path)
    assert [p.name for p in paths] == [vc_filename(1), vc_filename(2)] == ["vc_0001.smt2", "vc_0002.smt2"]


def test_q2_goldens(tmp_path, capsys):
    args = ["vcs", "corpus/quicksort.whp", "corpus/quicksort.proofs", "--only", "Q2"]
    assert main(args + ["--smtlib", str(tmp_path)]) == 0
    capsys.readouterr()
    produced = sorted(p.name for p in tmp_path.iterdir())
    frozen = sorted(p.name for p in (GOLDEN / "q2").iterdir())
    assert produced == frozen
    for name in frozen:
        assert (tmp_path / name).read_bytes() == (GOLDEN / "q2" / name).read_bytes()
    assert main(args) == 0
    assert capsys.readouterr().out == (GOLDEN / "q2_vcs.txt").read_text()


@pytest.mark.skipif(not HAVE_Z3, reason="z3 not installed")
def test_z3_answers(tmp_path):
    assert z3(emit_smtlib(vc("true", "max(y - x, 0) >= 0")), tmp_path).split()[0] == "unsat"
    out = z3(emit_smtlib(vc("x > 0", "x > 1")), tmp_path)
    assert out.split()[0] == "sat"


@pytest.mark.skipif(not HAVE_Z3, reason="z3 not installed")
def test_z3_perm_sorted(tmp_path):
    good = vc("sorted(a[0:2])", "a[0] <= a[2]")
    bad = vc("perm(a, b, [0:2])", "sorted(a[0:2])")
    assert z3(emit_smtlib(good), tmp_path).split()[0] == "unsat"
    assert z3(emit_smtlib(bad), tmp_path).split()[0] == "sat"
