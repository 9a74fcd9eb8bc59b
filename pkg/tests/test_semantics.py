import pytest

from modver import syntax as S
from modver.assertions import eval_assertion
from modver.parser import parse_expr, parse_program, parse_stmt
from modver.semantics import (
    Configuration, OutOfFuel, State, Terminated, array_list, make_array, parse_state, run, run_program, step,
    trace,
)


def test_call_step_is_block():
    prog = parse_program("P(u) :: u := u\nmain :: P(x + 1)")
    nxt = step(Configuration(prog.main, State({})), prog)
    assert nxt.stmt == parse_stmt("begin local u := x + 1; u := u end")


def test_block_step_freezes_old_value():
    nxt = step(Configuration(parse_stmt("begin local x := 1; skip end"), State({"x": 5})), ())
    assert S.show_stmt(nxt.stmt) == "x := 1;\nskip;\nx := 5"


def test_parallel_assignment():
    out = run(parse_stmt("x, y := y, x"), State({"x": 1, "y": 2}))
    assert out.final.get("x") == 2 and out.final.get("y") == 1


def test_quicksort_sorts(qs_expanded):
    out = run_program(qs_expanded, parse_state("a=[3,1,4,1,5]; x=0; y=4"))
    assert isinstance(out, Terminated)
    assert array_list(out.final.array("a"), 0, 4) == [1, 1, 3, 4, 5]


def test_local_shadowing_meaning():
    prog = parse_program("P :: if x = 1 then b := true else b := false fi\n"
                         "main :: begin local y := 1; P() end")
    out = run_program(prog, State({"x": 0}))
    assert out.final.get("b") is False or out.final.get("b") == 0


def test_divergence_is_out_of_fuel():
    assert isinstance(run(parse_stmt("while true do skip od"), State({}), (), 100), OutOfFuel)


def test_trace_shapes():
    t = trace(S.Skip(), State({}))
    assert len(t) == 2 and t[-1].terminal
    t = trace(parse_stmt("x := 1; x := 2"), State({}))
    assert len(t) == 3 and t[-1].state.get("x") == 2


def test_partition_trace_ends_partitioned(qs_expanded):
    t = trace(parse_stmt("Partition(0, 2)"), parse_state("a=[2,1,3]"), qs_expanded)
    assert t[-1].terminal
    post = parse_expr("le > ri and (forall i in [0:ri]: a[i] <= pi) and (forall i in [le:2]: pi <= a[i])")
    assert eval_assertion(post, t[-1].state.vals)


@pytest.mark.parametrize("text", ["a=[3,1,2]; x=0; y=2", "a=[3, 1, 2], x=0", "b=true; n=-3"])
def test_parse_state(text):
    st = parse_state(text)
    assert st.vals


def test_trace_agrees_with_run(qs_expanded):
    init = parse_state("a=[2,0,1]; x=0; y=2")
    t = trace(qs_expanded.main, init, qs_expanded)
    out = run_program(qs_expanded, init)
    assert t[-1].terminal and t[-1].state == out.final
    assert len(t) - 1 == out.steps


def test_make_array_drops_zeros():
    assert make_array([0, 2, 0]) == {1: 2}
