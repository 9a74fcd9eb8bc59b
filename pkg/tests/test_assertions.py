import pytest

from modver import syntax as S
from modver.assertions import (
    EvalWindow, WindowRequired, eval_assertion, eval_expr, free_vars, fresh_name, has_unbounded, substitute,
)
from modver.parser import parse_expr


def P(text):
    return parse_expr(text)


@pytest.mark.parametrize("text, want", [
    ("forall i: a[i] = a0[i]", {"a", "a0"}),
    ("sorted(a[x:y])", {"a", "x", "y"}),
    ("perm(a, a0, [x':y'])", {"a", "a0", "x'", "y'"}),
    ("exists k in [le:n]: pi <= a[k]", {"le", "n", "pi", "a"}),
])
def test_free_vars(text, want):
    assert free_vars(P(text)) == want


def test_substitute_simple():
    assert substitute(P("x > 0"), {"x": P("y + 1")}) == P("y + 1 > 0")


def test_substitute_subscripted_is_conditional():
    got = substitute(P("a[i] = 1"), {S.Index(S.Var("a"), S.Var("j")): S.Int(2)})
    assert got == S.eq(S.Cond(S.eq(S.Var("i"), S.Var("j")), S.Int(2), P("a[i]")), S.Int(1))


def test_substitute_avoids_capture():
    got = substitute(P("forall i in [0:3]: a[i] <= x"), {"x": P("i + 1")})
    assert "i" in free_vars(got)  # the free i survived, the bound one was renamed


def test_k_instance(qs_proofs):
    k = qs_proofs.macros["K"]
    got = substitute(k, {"v": S.Var("ri"), "w": S.Var("le")})
    assert free_vars(got) == {"ri", "le", "m", "n", "a"}


@pytest.mark.parametrize("text, env, want", [
    ("n - m", {"n": 5, "m": 2}, 3),
    ("a[le]", {"a": {0: 7, 1: 9}, "le": 1}, 9),
    ("max(y - x, 0)", {"x": 4, "y": 1}, 0),
])
def test_eval_expr(text, env, want):
    assert eval_expr(P(text), env) == want


def test_sorted_and_perm():
    assert eval_assertion(P("sorted(a[0:2])"), {"a": {0: 1, 1: 2, 2: 2}})
    assert eval_assertion(P("perm(a, a0, [0:1])"), {"a": {0: 2, 1: 1, 5: 3}, "a0": {0: 1, 1: 2, 5: 3}})
    assert not eval_assertion(P("perm(a, a0, [0:1])"), {"a": {0: 2, 1: 1}, "a0": {0: 1, 1: 2, 5: 3}})


def test_j_with_trivial_segment():
    env = {"m": 3, "n": 3, "x": 3, "y": 3, "a": {3: 9}}
    assert eval_assertion(P("m = x and n = y and n <= m -> sorted(a[x:y])"), env)


def test_unbounded_needs_window():
    with pytest.raises(WindowRequired):
        eval_assertion(P("forall i: a[i] = 0"), {"a": {}})
    win = EvalWindow(-2, 2, 2, 0, 1)
    assert eval_assertion(P("forall i: a[i] = 0"), {"a": {}}, win)
    assert has_unbounded(P("forall i: a[i] = 0")) and not has_unbounded(P("forall i in [0:1]: a[i] = 0"))


def test_fresh_name():
    got = fresh_name("x", {"x", "x_1"})
    assert got.startswith("x") and got not in {"x", "x_1"}
