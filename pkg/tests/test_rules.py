"""Rule engine: accepted instances, and one rejection per side condition."""

import pytest

from modver import syntax as S
from modver.parser import parse_expr, parse_stmt
from modver.proof import (
    PARTIAL, TOTAL, Fact, RuleInstance, SchemaError, SideConditionError, Triple, apply_rule, derive,
)


def P(t):
    return parse_expr(t)


def fact(pre, stmt, post, mode=PARTIAL):
    return Fact(Triple(P(pre), parse_stmt(stmt) if isinstance(stmt, str) else stmt, P(post), mode))


def test_assign_axiom():
    t = Triple(P("y + 1 > 0"), parse_stmt("x := y + 1"), P("x > 0"))
    got, vcs = apply_rule(RuleInstance("ASSIGN", conclusion=t))
    assert got == t and vcs == []


def test_assign_wrong_pre():
    with pytest.raises(SchemaError):
        apply_rule(RuleInstance("ASSIGN", conclusion=Triple(P("y > 0"), parse_stmt("x := y + 1"), P("x > 0"))))


def test_instantiate_q3(qs_program):
    q3 = fact("true", "Quicksort(x, y)", "sorted(a[x:y])")
    got, _ = apply_rule(RuleInstance("INSTANTIATE", (q3,), witness={"args": (S.Var("m"), S.Var("v"))}),
                        decls=qs_program)
    assert got == Triple(S.TRUE, parse_stmt("Quicksort(m, v)"), P("sorted(a[m:v])"))


def test_invariance_axiom_j(qs_program):
    p = P("m = x and n = y")
    got, _ = apply_rule(RuleInstance("INV_AXIOM", witness={"p": p, "stmt": parse_stmt("Partition(m, n)")}),
                        decls=qs_program)
    assert got.pre == p == got.post


def test_consequence_emits_two_vcs():
    base = fact("x > 1", "skip", "x > 1")
    _, vcs = derive(RuleInstance("CONSEQ", (base,), witness={"pre": P("x > 2"), "post": P("x > 0")}))
    assert len(vcs) == 2


def test_loop_ii_bound_vc():
    body = parse_stmt("x := x - 1")
    a = fact("x + 1 > 0 and x > 0", body, "x + 1 > 0", TOTAL)
    b = Fact(Triple(S.conj([P("x + 1 > 0"), P("x > 0"), S.eq(S.Var("x"), S.Var("_z0"))]), body,
                    S.lt(S.Var("x"), S.Var("_z0")), TOTAL))
    got, vcs = apply_rule(RuleInstance("LOOP_II", (a, b), witness={
        "inv": P("x + 1 > 0"), "cond": P("x > 0"), "bound": S.Var("x"), "z": "_z0"}))
    assert got.mode == TOTAL
    assert [v.origin.endswith("bound non-negative") for v in vcs] == [True]


# -- side conditions: one rejection each ------------------------------------


def test_block_side():
    prem = fact("true", "x := 1; y := x", "x = 1")
    with pytest.raises(SideConditionError) as exc:
        derive(RuleInstance("BLOCK", (prem,)))
    assert exc.value.rule == "BLOCK" and exc.value.offending == ("x",)


def test_instantiate_generic_var_in_decls(qs_program):
    prem = fact("true", "Quicksort(le, y)", "sorted(a[le:y])")
    with pytest.raises(SideConditionError) as exc:
        derive(RuleInstance("INSTANTIATE", (prem,), witness={"args": (S.Var("m"), S.Var("v"))}), decls=qs_program)
    assert "var(D)" in exc.value.condition and exc.value.offending == ("le",)


def test_instantiate_actual_changed(qs_program):
    prem = fact("true", "Quicksort(x, y)", "sorted(a[x:y])")
    with pytest.raises(SideConditionError) as exc:
        derive(RuleInstance("INSTANTIATE", (prem,), witness={"args": (S.Var("m"), S.Var("ri"))}), decls=qs_program)
    assert "change(D)" in exc.value.condition and exc.value.offending == ("ri",)


def test_invariance_side(qs_program):
    inst = RuleInstance("INV_AXIOM", witness={"p": P("pi = 0"), "stmt": parse_stmt("Partition(m, n)")})
    with pytest.raises(SideConditionError) as exc:
        derive(inst, decls=qs_program)
    assert exc.value.offending == ("pi",)
    prem = fact("true", "Partition(m, n)", "true")
    with pytest.raises(SideConditionError):
        derive(RuleInstance("INV_RULE", (prem,), witness={"p": P("le = 0")}), decls=qs_program)


def test_exists_intro_side(qs_program):
    prem = fact("le = 0", "Partition(m, n)", "true")
    with pytest.raises(SideConditionError) as exc:
        derive(RuleInstance("EXISTS_INTRO", (prem,), witness={"var": "le"}), decls=qs_program)
    assert exc.value.rule == "EXISTS_INTRO"
    prem = fact("k = 0", "skip", "k = 0")
    with pytest.raises(SideConditionError):
        derive(RuleInstance("EXISTS_INTRO", (prem,), witness={"var": "k"}))


def test_subst_side(qs_program):
    prem = fact("x' <= m", "Partition(m, n)", "x' <= m")
    with pytest.raises(SideConditionError) as exc:
        derive(RuleInstance("SUBST_RULE", (prem,), witness={"map": {S.Var("x'"): S.Var("le")}}), decls=qs_program)
    assert exc.value.offending == ("le",)


def test_loop_ii_z_fresh():
    body = parse_stmt("x := x - k")
    a = fact("x >= 0 and x > 0", body, "x >= 0", TOTAL)
    b = Fact(Triple(S.conj([P("x >= 0"), P("x > 0"), S.eq(S.Var("x"), S.Var("k"))]), body,
                    S.lt(S.Var("x"), S.Var("k")), TOTAL))
    with pytest.raises(SideConditionError) as exc:
        derive(RuleInstance("LOOP_II", (a, b), witness={
            "inv": P("x >= 0"), "cond": P("x > 0"), "bound": S.Var("x"), "z": "k"}))
    assert exc.value.rule == "LOOP_II"


def test_recursion_ii_constant_z():
    prem = Fact(Triple(S.eq(S.Var("x"), S.Var("_r1")), S.Skip(), S.TRUE, TOTAL))
    with pytest.raises(SideConditionError) as exc:
        derive(RuleInstance("EXISTS_INTRO", (prem,), witness={"var": "_r1"}), constants={"_r1"})
    assert "constant" in exc.value.condition
    with pytest.raises(SideConditionError):
        derive(RuleInstance("SUBST_RULE", (prem,), witness={"map": {S.Var("_r1"): S.Int(0)}}), constants={"_r1"})


def test_recursion_ii_rejects_touched_z(qs_program):
    d = qs_program.decl_map["Quicksort"]
    body = S.Block(d.formals, (S.Var("x"), S.Var("y")), d.body)
    hyp = Triple(S.TRUE, parse_stmt("Quicksort(x, y)"), S.TRUE, TOTAL)
    pre = S.conj([S.TRUE, S.eq(P("max(y - x, 0)"), S.Var("_r1"))])
    touched = Fact(Triple(pre, body, S.TRUE, TOTAL), touched=frozenset({"_r1"}))
    with pytest.raises(SideConditionError) as exc:
        derive(RuleInstance("RECURSION_II", (touched,), witness={
            "hyps": {"Q4": hyp}, "z": "_r1", "bounds": {"Q4": P("max(y - x, 0)")}}), decls=qs_program)
    assert "constant" in exc.value.condition


def test_decompose_needs_true_post():
    a = fact("true", "skip", "x = 0")
    b = fact("true", "skip", "x = 0", TOTAL)
    with pytest.raises(SchemaError):
        derive(RuleInstance("DECOMPOSE", (a, b)))
