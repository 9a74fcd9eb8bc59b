"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` to see the summary.
"""

import importlib.util
import json
import shutil
import subprocess
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from modver.cli import main
from modver.corpus import MUTANTS, corpus_entry

ROOT = Path(__file__).resolve().parent.parent
QS = str(corpus_entry("quicksort").program_path)
QP = str(corpus_entry("quicksort").proofs_path)
GOLDEN = ROOT / "tests" / "golden" / "q2"


@contextmanager
def criterion(n, text, capsys):
    ok = False
    try:
        yield
        ok = True
    finally:
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'}: {text}")


def _json(capsys, argv):
    code = main(argv + ["--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out[out.index("{"):])


def _pytest(*targets):
    res = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", *targets],
                         cwd=ROOT, capture_output=True, text=True)
    return res.returncode, res.stdout[-2000:]


def _script(name):
    loader_spec = importlib.util.spec_from_file_location(name, ROOT / "scripts" / f"{name}.py")
    mod = importlib.util.module_from_spec(loader_spec)
    sys.modules[name] = mod
    loader_spec.loader.exec_module(mod)
    return mod


@pytest.mark.slow
def test_1_corpus_verifies_in_window(capsys):
    with criterion(1, "check verifies the corpus on the default window within 10 minutes", capsys):
        t0 = time.perf_counter()
        code, doc = _json(capsys, ["check", QS, QP])
        elapsed = time.perf_counter() - t0
        assert code == 0 and doc["status"] == "VERIFIED(window)"
        assert doc["window"] == {"int_lo": -2, "int_hi": 5, "array_max_len": 4, "value_lo": 0, "value_hi": 3}
        assert {c["status"] for c in doc["contracts"]} == {"verified (window)"}
        assert elapsed < 600


def test_2_partition_by_pd_td(capsys):
    with criterion(2, "P1-P3 proven by PD and P4 by TD from Partition's body alone", capsys):
        code, doc = _json(capsys, ["check", QS, QP, "--only", "P1,P2,P3,P4"])
        rules = {c["name"]: (c["rule"], c["mode"]) for c in doc["contracts"]}
        assert rules == {"P1": ("PD", "partial"), "P2": ("PD", "partial"),
                         "P3": ("PD", "partial"), "P4": ("TD", "total")}
        assert code == 0


@pytest.mark.slow
def test_3_exhaustive_quicksort(capsys):
    with criterion(3, "Quicksort sorts and permutes every array of length <= 6 over [0,4]", capsys):
        mod = _script("exhaustive_quicksort")
        res = mod.sweep(mod.SweepConfig(max_len=6, value_hi=4))
        assert res.cases == sum(5 ** n for n in range(7))
        assert res.failures == []


@pytest.mark.slow
def test_4_fuzz(capsys):
    with criterion(4, "fuzzing accepted contracts finds nothing; the self-test is flagged", capsys):
        code, doc = _json(capsys, ["fuzz", QS, QP, "--trials", "500", "--self-test"])
        assert code == 1
        real = [t for t in doc["triples"] if t["name"] != "self-test"]
        assert len(real) == 9 and all(t["trials"] >= 500 and not t["violations"] for t in real)
        bad = next(t for t in doc["triples"] if t["name"] == "self-test")
        assert len(bad["violations"]) == bad["trials"] >= 500


def test_5_side_conditions(capsys):
    with criterion(5, "every side condition rejects its offending instance", capsys):
        names = ["block_side", "instantiate_generic_var_in_decls", "instantiate_actual_changed",
                 "invariance_side", "exists_intro_side", "subst_side", "loop_ii_z_fresh",
                 "recursion_ii_constant_z", "recursion_ii_rejects_touched_z"]
        code, out = _pytest(*(f"tests/test_rules.py::test_{n}" for n in names))
        assert code == 0, out
        assert f"{len(names)} passed" in out
        assert main(["corpus", "check", "name-clash-negative"]) == 2
        assert "name-clash" in capsys.readouterr().out


@pytest.mark.slow
def test_6_mutants_refuted(capsys):
    with criterion(6, "every mutant is refuted with exit 1", capsys):
        codes = {}
        for m in MUTANTS:
            codes[m.name] = main(["corpus", "check", "mutations", "--mutant", m.name, "--fail-fast"])
            capsys.readouterr()
        assert codes == {m.name: 1 for m in MUTANTS}


def test_7_metatheory(capsys):
    with criterion(7, "determinism, block restoration, frame, substitution lemma, perm readings", capsys):
        code, out = _pytest("tests/test_metatheory.py")
        assert code == 0, out


def test_8_q2_goldens(capsys, tmp_path):
    with criterion(8, "Q2 SMT-LIB scripts match the frozen goldens byte for byte", capsys):
        assert main(["vcs", QS, QP, "--only", "Q2", "--smtlib", str(tmp_path)]) == 0
        capsys.readouterr()
        frozen = sorted(GOLDEN.iterdir())
        assert sorted(p.name for p in tmp_path.iterdir()) == [p.name for p in frozen]
        for p in frozen:
            assert (tmp_path / p.name).read_bytes() == p.read_bytes()
        if shutil.which("z3"):
            # optional clause: no corpus VC may be satisfiable; a solver timeout is inconclusive
            res = subprocess.run([sys.executable, "scripts/z3_crosscheck.py", "--timeout", "30"],
                                 cwd=ROOT, capture_output=True, text=True)
            with capsys.disabled():
                print(f"\n  z3: {res.stdout.strip().splitlines()[-1]}")
            assert res.returncode == 0, res.stdout
