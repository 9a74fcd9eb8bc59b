import pytest

from modver import syntax as S
from modver.corpus import corpus_entry
from modver.lang import MacroError, change, expand_macros, program_sets, well_formed
from modver.parser import ParseError, parse_program, parse_stmt
from modver.semantics import State, run

SECTION2_D = "P :: if x = 1 then b := true else b := false fi\n"


def test_skip_parses():
    assert parse_stmt("skip") == S.Skip()


def test_quicksort_shape(qs_program):
    assert [d.name for d in qs_program.decls] == ["Quicksort", "Partition"]
    body = qs_program.decl_map["Quicksort"].body
    assert isinstance(body, S.If)
    assert body.cond == S.lt(S.Var("m"), S.Var("n"))
    assert body.else_ == S.Skip()  # if-then-fi sugar
    first, rest = body.then.first, body.then.second
    assert first == S.Call("Partition", (S.Var("m"), S.Var("n")))
    assert isinstance(rest, S.Block) and rest.names == ("v", "w")
    assert rest.values == (S.Var("ri"), S.Var("le"))
    assert rest.body == S.Seq(S.Call("Quicksort", (S.Var("m"), S.Var("v"))),
                              S.Call("Quicksort", (S.Var("w"), S.Var("n"))))


@pytest.mark.parametrize("src", ["begin local ; skip end", "x := ", "while x do skip", "if x then skip"])
def test_parse_errors_carry_position(src):
    with pytest.raises(ParseError) as exc:
        parse_stmt(src)
    assert exc.value.line >= 1 and exc.value.col >= 1


def test_name_clash_rejected():
    prog = parse_program(SECTION2_D + "main :: begin local x := 1; P() end")
    wf = well_formed(prog)
    assert "name-clash" in wf.kinds()
    assert "x" in wf.format()


def test_renamed_local_accepted():
    prog = parse_program(SECTION2_D + "main :: begin local y := 1; P() end")
    assert well_formed(prog).ok


def test_arity_rejected():
    src = corpus_entry("quicksort").program_path.read_text()
    prog = parse_program(src.replace("Quicksort(x, y)", "Quicksort(x)"))
    assert "arity" in well_formed(prog).kinds()


def test_duplicate_and_formals():
    assert "duplicate-decl" in well_formed(parse_program("P :: skip\nP :: skip")).kinds()
    assert "formals" in well_formed(parse_program("P(u, u) :: skip")).kinds()
    assert "undeclared" in well_formed(parse_program("main :: Q(1)")).kinds()


def test_repeated_parallel_targets():
    assert "vars" in well_formed(parse_program("main :: x, x := 1, 2")).kinds()


def test_change_sets(qs_program):
    _, ch = program_sets(qs_program.decls)
    assert ch == {"pi", "le", "ri", "a"}
    assert program_sets(qs_program.decl_map["Quicksort"])[1] == frozenset()
    assert program_sets(parse_stmt("Partition(m, n)"))[1] == frozenset()
    assert change(parse_stmt("begin local x := 1; x := 2; y := x end")) == {"y"}


def test_swap_expansion_shape():
    got = expand_macros(S.Swap(S.Index(S.Var("a"), S.Var("le")), S.Index(S.Var("a"), S.Var("ri"))))
    assert S.show_stmt(got) == "begin local _sw0 := a[le];\n  a[le] := a[ri];\n  a[ri] := _sw0\nend"


def test_swap_runs():
    s = expand_macros(parse_stmt("swap(a[i], a[j])"))
    out = run(s, State({"a": {0: 5, 1: 7}, "i": 0, "j": 1}))
    assert out.final.array("a") == {0: 7, 1: 5}
    same = run(expand_macros(parse_stmt("swap(x, x)")), State({"x": 4}))
    assert same.final.get("x") == 4


def test_swap_needs_variables():
    with pytest.raises(MacroError):
        expand_macros(S.Swap(S.Int(1), S.Var("x")))


def test_program_sets_pure(qs_program):
    assert program_sets(qs_program.decls) == program_sets(qs_program.decls)
