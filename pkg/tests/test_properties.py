"""Property tests over generated expressions, statements and states."""

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from modver import syntax as S
from modver.assertions import EvalWindow, eval_assertion, eval_expr, rename_bound, substitute
from modver.discharge import Counterexample, DomainConfig, Valid, discharge_bounded
from modver.fuzz import bad_triple, fuzz_soundness
from modver.parser import parse_expr, parse_stmt
from modver.proof import VC
from modver.semantics import State, make_array, run
from modver.vector import Batch, Fallback, holds

A = S.Var("a")
SCALARS = ["x", "y", "z"]
CFG = DomainConfig(-2, 3, 3, 0, 2)
WIN = EvalWindow(CFG.int_lo, CFG.int_hi, CFG.array_max_len, CFG.value_lo, CFG.value_hi,
                 include_mentioned=False)

leaf_terms = st.one_of(st.integers(-2, 3).map(S.Int), st.sampled_from(SCALARS).map(S.Var))


def _terms(children):
    return st.one_of(
        st.builds(S.Binary, st.sampled_from(["+", "-", "*", "max", "min"]), children, children),
        st.builds(lambda i: S.Index(A, i), children),
    )


terms = st.recursive(leaf_terms, _terms, max_leaves=4)


def _bounded(kind, body_fn):
    return st.builds(lambda lo, hi, body: S.Quant(kind, "i", body, lo, hi), leaf_terms, leaf_terms, body_fn)


atoms = st.one_of(
    st.builds(S.Binary, st.sampled_from(["<", "<=", "="]), terms, terms),
    st.builds(lambda lo, hi: S.Sorted(A, lo, hi), leaf_terms, leaf_terms),
    st.builds(lambda lo, hi: S.Perm(A, S.Var("b"), lo, hi), leaf_terms, leaf_terms),
    st.booleans().map(S.Bool),
)


def _formulas(children):
    ii = S.Var("i")
    qbody = st.builds(lambda t, u: S.Binary("<=", S.Index(A, ii), S.Binary("+", t, u)), leaf_terms,
                      st.just(ii))
    return st.one_of(
        st.builds(S.Binary, st.sampled_from(["and", "or", "->"]), children, children),
        st.builds(lambda p: S.Unary("not", p), children),
        _bounded("forall", qbody),
        _bounded("exists", qbody),
    )


formulas = st.recursive(atoms, _formulas, max_leaves=5)

arrays = st.lists(st.integers(0, 2), max_size=3).map(make_array)
envs = st.fixed_dictionaries({"x": st.integers(-2, 3), "y": st.integers(-2, 3), "z": st.integers(-2, 3),
                              "a": arrays, "b": arrays})


@settings(max_examples=300)
@given(formulas)
def test_show_parse_roundtrip(p):
    assert parse_expr(S.show(p)) == p


def _stmts(children):
    return st.one_of(
        st.builds(lambda a, b: S.Seq(a, b), children, children),
        st.builds(S.If, formulas, children, children),
        st.builds(lambda v, e, body: S.Block((v,), (e,), body), st.sampled_from(SCALARS), terms, children),
    )


simple_stmts = st.one_of(
    st.just(S.Skip()),
    st.builds(S.Assign, st.sampled_from(SCALARS).map(S.Var), terms),
    st.builds(lambda i, e: S.Assign(S.Index(A, i), e), leaf_terms, terms),
)
stmts = st.recursive(simple_stmts, _stmts, max_leaves=5)


@settings(max_examples=200, deadline=None)
@given(stmts, envs)
def test_statement_roundtrip_preserves_meaning(s, env):
    text = S.show_stmt(s)
    again = parse_stmt(text)
    assert S.show_stmt(again) == text
    assert run(s, State(env)).final == run(again, State(env)).final


def _binders(p):
    if isinstance(p, S.Quant):
        return {p.var} | _binders(p.body)
    return set().union(*(_binders(c) for c in vars(p).values() if isinstance(c, S.Expr)))


@settings(max_examples=300)
@given(formulas, envs, st.sampled_from(["j", "k", "q"]))
def test_alpha_invariance(p, env, fresh):
    renamed = rename_bound(p, {"i"})
    assert "i" not in _binders(renamed)
    assert eval_assertion(renamed, env, WIN) == eval_assertion(p, env, WIN)
    swapped = substitute(p, {"i": S.Var(fresh)})  # i only occurs bound, so nothing changes
    assert eval_assertion(swapped, env, WIN) == eval_assertion(p, env, WIN)


@settings(max_examples=300)
@given(arrays, st.integers(-1, 4), st.integers(-1, 4), st.integers(0, 2), st.integers(0, 2))
def test_sorted_monotone(arr, x, y, dl, dr):
    env = {"a": arr, "x": x, "y": y, "u": x + dl, "v": y - dr}
    if eval_expr(parse_expr("sorted(a[x:y])"), env):
        assert eval_expr(parse_expr("sorted(a[u:v])"), env)


def _batch(rows):
    off, width = CFG.span()
    env = {}
    for n in SCALARS:
        env[n] = np.array([r[n] for r in rows], dtype=np.int64)
    for n in ("a", "b"):
        m = np.zeros((len(rows), width), dtype=np.int64)
        for k, r in enumerate(rows):
            for i, v in r[n].items():
                m[k, i - off] = v
        env[n] = m
    return Batch(len(rows), off, width, env, ints=CFG.ints())


@settings(max_examples=300, deadline=None)
@given(formulas, st.lists(envs, min_size=1, max_size=8))
def test_vector_matches_scalar(p, rows):
    b = _batch(rows)
    try:
        got = holds(p, b)
    except Fallback:
        assume(False)
    for k, r in enumerate(rows):
        if not b.spill[k]:
            assert bool(got[k]) == eval_assertion(p, r, WIN), (S.show(p), r)


@settings(max_examples=100, deadline=None)
@given(formulas, formulas)
def test_counterexamples_are_genuine(h, c):
    got = discharge_bounded(VC(h, c, "generated"), CFG)
    if isinstance(got, Counterexample):
        env = got.state
        assert eval_assertion(h, env, CFG.window()) and not eval_assertion(c, env, CFG.window())


@settings(max_examples=100, deadline=None)
@given(formulas)
def test_tautology_valid(p):
    assert isinstance(discharge_bounded(VC(p, p, "generated"), CFG), Valid)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_fuzz_reproducible(seed):
    prog = S.Program(())
    a = fuzz_soundness([bad_triple()], prog, trials=10, seed=seed)
    b = fuzz_soundness([bad_triple()], prog, trials=10, seed=seed)
    assert [v.initial for v in a.triples[0].violations] == [v.initial for v in b.triples[0].violations]
