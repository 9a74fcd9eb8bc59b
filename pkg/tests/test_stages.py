import pytest

from modver import syntax as S
from modver.corpus import corpus_entry
from modver.outline import MissingAnnotation, Scope, check_outline
from modver.parser import parse_expr, parse_outline, parse_program
from modver.proof import PARTIAL, TOTAL, ProofError, SideConditionError
from modver.stages import CycleError, check_proofs, parse_proofs, stage_order


def qs_text(entry="quicksort"):
    e = corpus_entry(entry)
    return e.program_path.read_text(), e.proofs_path.read_text(), e.sources()[2]


def test_stage_order(qs_proofs):
    names = [s.name for s in stage_order(qs_proofs)]
    assert names.index("SP1") < names.index("S2") < names.index("S3") < names.index("S1")
    assert names.index("SP4") < names.index("S4") < names.index("S1T")


def test_contract_rules(qs_checked):
    by = {c.name: c for c in qs_checked.contracts}
    assert {by[n].rule for n in ("P1", "P2", "P3")} == {"PD"}
    assert by["P4"].rule == "TD" and by["P4"].mode == TOTAL
    assert by["Q4"].rule == "RECURSION_II"
    assert by["Q1T"].rule == "DECOMPOSE" and by["Q1T"].mode == TOTAL
    assert by["Q1"].mode == PARTIAL


def test_q4_vcs(qs_checked):
    q4 = next(c for c in qs_checked.contracts if c.name == "Q4")
    shown = [S.show(v.concl) for v in q4.vcs]
    assert any("max(v - m, 0) < _r" in s and "max(n - w, 0) < _r" in s for s in shown)
    assert "0 <= max(y - x, 0)" in shown


def test_q2_vc(qs_checked):
    q2 = next(c for c in qs_checked.contracts if c.name == "Q2")
    assert len(q2.vcs) == 1
    assert "perm(a, a0, [x':y'])" in S.show(q2.vcs[0].hyp)


def test_vc_determinism(qs_program, qs_proofs, qs_checked):
    again = check_proofs(qs_program, qs_proofs)
    assert [v.show() for v in again.vcs] == [v.show() for v in qs_checked.vcs]
    assert [v.origin for v in again.vcs] == [v.origin for v in qs_checked.vcs]


def test_stage_monotonicity(qs_program, qs_checked):
    prog, proofs, loader = qs_text()
    extra = proofs + "\ncontract Z partial on Quicksort(x, y) pre { true } post { true }\n" \
                     "derive ZL { from Z; instantiate x, y := m, v }\n" \
                     "derive ZR { from Z; instantiate x, y := w, n }\n" \
                     "outline Z { begin local m, n := x, y; if m < n then Partition(m, n) by P1; " \
                     "begin local v, w := ri, le; Quicksort(m, v) by ZL; Quicksort(w, n) by ZR end fi end }\n" \
                     "stage SZ: Z uses P1\n"
    res = check_proofs(qs_program, parse_proofs(extra, "q.proofs", loader))
    before = {c.name: [v.show() for v in c.vcs] for c in qs_checked.contracts}
    after = {c.name: [v.show() for v in c.vcs] for c in res.contracts if c.name in before}
    assert before == after


def test_cycle_rejected(qs_program):
    text = ("contract A partial on Partition(m, n) pre { true } post { true }\n"
            "contract B partial on Partition(m, n) pre { true } post { true }\n"
            "stage SA: A uses B\nstage SB: B uses A\n")
    with pytest.raises(CycleError):
        check_proofs(qs_program, parse_proofs(text))


def test_skip_outline_no_vcs(qs_program):
    res = check_outline(parse_outline("{ true } skip { true }"), S.TRUE, Scope(qs_program))
    assert res.vcs == []


def test_missing_loop_invariant(qs_program):
    with pytest.raises(MissingAnnotation):
        check_outline(parse_outline("while x < 3 do x := x + 1 od"), parse_expr("x = 3"), Scope(qs_program))


def test_implicit_else_vc(qs_program):
    res = check_outline(parse_outline("{ true } if x < 0 then x := 0 - x fi"), parse_expr("0 <= x"),
                        Scope(qs_program))
    assert [v.show() for v in res.vcs if "implicit else" in v.origin] == ["not x < 0  ->  0 <= x"]


def _rejects(mutate, match):
    prog, proofs, loader = qs_text()
    new = mutate(proofs)
    assert new != proofs
    program = parse_program(prog)
    with pytest.raises(ProofError) as exc:
        check_proofs(program, parse_proofs(new, "q.proofs", loader))
    assert match in str(exc.value)
    return exc.value


def test_script_instantiate_with_changed_actual():
    err = _rejects(lambda t: t.replace("derive QR { from Q2; instantiate x, y := w, n }",
                                       "derive QR { from Q2; instantiate x, y := w, ri }"), "INSTANTIATE")
    assert isinstance(err, SideConditionError)


def test_script_invariance_on_changed_var():
    _rejects(lambda t: t.replace("derive PK { from P3; invariance { J } }",
                                 "derive PK { from P3; invariance { J and pi = pi } }"), "free(p)")


def test_script_exists_on_changed_var():
    _rejects(lambda t: t.replace("derive Q4A { from Q4; conseq pre { a = a0 } }",
                                 "derive Q4A { from Q4; conseq pre { a = a0 }; exists a }"), "EXISTS_INTRO")


def test_unavailable_contract():
    _rejects(lambda t: t.replace("stage S3: Q3 uses P3, Q2", "stage S3: Q3 uses P3"), "not available")


def test_block_local_in_post():
    _rejects(lambda t: t.replace("""        Quicksort(w, n) by TR
        { true }
      end""", """        Quicksort(w, n) by TR
        { true }
      end
      { v = v }""").replace("""  end
  { true }
}

stage S4""", """  end
  { true }
}

stage S4"""), "BLOCK")
