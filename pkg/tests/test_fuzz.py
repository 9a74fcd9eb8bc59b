from modver import syntax as S
from modver.discharge import DomainConfig
from modver.fuzz import _copies, bad_triple, fuzz_soundness
from modver.parser import parse_expr, parse_program
from modver.proof import PARTIAL, TOTAL, Triple

PROG = parse_program("main :: skip")


def facts(checked, names):
    return [(n, checked.facts[n].triple) for n in names]


def test_corpus_triples_hold(qs_checked, qs_expanded):
    rep = fuzz_soundness(facts(qs_checked, ["P1", "P3", "Q1", "Q4"]), qs_expanded, trials=100, seed=3)
    assert rep.ok, [(t.name, t.violations[:1]) for t in rep.triples]
    assert all(t.trials == 100 for t in rep.triples)


def test_self_test_is_flagged():
    rep = fuzz_soundness([bad_triple()], PROG, trials=50)
    assert not rep.ok and rep.violations == 50
    assert rep.triples[0].violations[0].reason == "postcondition fails"


def test_total_mode_catches_divergence():
    stmt = parse_program("main :: while 0 < x do x := x + 1 od").main
    pre = parse_expr("0 < x")
    partial = fuzz_soundness([("p", Triple(pre, stmt, S.FALSE, PARTIAL))], PROG, trials=5, fuel=200)
    total = fuzz_soundness([("t", Triple(pre, stmt, S.TRUE, TOTAL))], PROG, trials=5, fuel=200)
    assert partial.ok and partial.triples[0].diverged == 5
    assert not total.ok


def test_copies_pin_equations():
    assert _copies(parse_expr("a0 = a and 0 <= x")) == [("a", S.Var("a0"))]


def test_reproducible(qs_checked, qs_expanded):
    run = lambda seed: fuzz_soundness(facts(qs_checked, ["P2"]), qs_expanded, trials=20, seed=seed,
                                      window=DomainConfig(array_max_len=3))
    a, b = run(7), run(7)
    assert [(t.trials, t.rejected) for t in a.triples] == [(t.trials, t.rejected) for t in b.triples]
