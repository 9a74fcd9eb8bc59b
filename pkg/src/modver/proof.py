"""Rule engine for the Hoare-style proof systems over recursive programs.

A derived judgement is a :class:`Fact`: a triple together with the names of
the recursion hypotheses it rests on.  ``derive`` checks one rule application
(schema and side conditions) and returns the concluded fact plus the
verification conditions (implications) the application leaves open.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import syntax as S
from .assertions import free_vars, substitute
from .lang import change, decls_change, decls_vars, expr_vars, stmt_vars
from .syntax import (
    ArrayExists, Assign, Block, Call, Expr, If, ParAssign, Quant, Seq, Skip, Stmt, Var, While,
)

PARTIAL, TOTAL = "partial", "total"

RULES = (
    "SKIP", "ASSIGN", "PAR_ASSIGN", "COMP", "COND", "LOOP", "LOOP_II", "CONSEQ", "INV_AXIOM",
    "DISJ", "CONJ", "EXISTS_INTRO", "INV_RULE", "SUBST_RULE", "BLOCK", "INSTANTIATE",
    "RECURSION", "RECURSION_II", "DECOMPOSE", "MODULARITY",
)


class ProofError(Exception):
    pass


class SideConditionError(ProofError):
    """A rule's side condition fails; ``condition`` names it, ``offending`` lists variables."""

    def __init__(self, rule: str, condition: str, offending: Iterable[str] = (), detail: str = ""):
        self.rule = rule
        self.condition = condition
        self.offending = tuple(sorted(offending))
        msg = f"{rule}: side condition {condition} violated"
        if self.offending:
            msg += f" by {', '.join(self.offending)}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SchemaError(ProofError):
    pass


@dataclass(frozen=True)
class Triple:
    pre: Expr
    stmt: Stmt
    post: Expr
    mode: str = PARTIAL

    def show(self) -> str:
        return f"{{{S.show(self.pre)}}} {S.summary(self.stmt, 80)} {{{S.show(self.post)}}}"


@dataclass(frozen=True)
class Fact:
    triple: Triple
    assumptions: frozenset[str] = frozenset()
    touched: frozenset[str] = frozenset()  # variables hit by EXISTS_INTRO or SUBST_RULE
    rule: str = "ASSUME"

    @property
    def mode(self) -> str:
        return self.triple.mode


@dataclass(frozen=True)
class VC:
    hyp: Expr
    concl: Expr
    origin: str
    witness: tuple[tuple[str, Expr], ...] = ()
    id: str = ""

    def formula(self) -> Expr:
        return S.implies(self.hyp, self.concl)

    def show(self) -> str:
        return f"{S.show(self.hyp)}  ->  {S.show(self.concl)}"


@dataclass(frozen=True)
class RuleInstance:
    rule: str
    premises: tuple = ()  # Facts, or names looked up in the context
    conclusion: Triple | None = None
    witness: Mapping[str, object] = field(default_factory=dict)
    origin: str = ""


def make_vc(hyp: Expr, concl: Expr, origin: str, witness=None) -> VC | None:
    """An implication obligation, or None when it holds syntactically."""
    if hyp == concl or concl == S.TRUE:
        return None
    hyps = set(S.conjuncts(hyp))
    if all(c in hyps for c in S.conjuncts(concl)):
        return None
    return VC(hyp, concl, origin, tuple(sorted((witness or {}).items())))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _decls(decls) -> tuple[S.Decl, ...]:
    if decls is None:
        return ()
    if isinstance(decls, S.Program):
        return decls.decls
    if isinstance(decls, dict):
        return tuple(decls.values())
    return tuple(decls)


def changes(decls, stmt: Stmt) -> frozenset[str]:
    """change(D) together with change(S)."""
    return decls_change(_decls(decls)) | change(stmt)


def _resolve(p, ctx: Mapping[str, Fact]) -> Fact:
    if isinstance(p, Fact):
        return p
    if isinstance(p, str):
        if p not in ctx:
            raise SchemaError(f"premise {p} is not in the context")
        return ctx[p]
    raise SchemaError(f"bad premise reference {p!r}")


def _mode(facts: Sequence[Fact]) -> str:
    return TOTAL if facts and all(f.mode == TOTAL for f in facts) else PARTIAL


def _join(facts: Sequence[Fact], rule: str, touched: Iterable[str] = ()) -> dict:
    a: frozenset[str] = frozenset()
    t: frozenset[str] = frozenset(touched)
    for f in facts:
        a |= f.assumptions
        t |= f.touched
    return {"assumptions": a, "touched": t, "rule": rule}


def _need(n: int, facts: Sequence[Fact], rule: str) -> None:
    if len(facts) != n:
        raise SchemaError(f"{rule} takes {n} premise(s), got {len(facts)}")


def _check_conclusion(expected: Triple, given: Triple | None, rule: str) -> Triple:
    if given is None:
        return expected
    if (given.pre, given.stmt, given.post) != (expected.pre, expected.stmt, expected.post):
        raise SchemaError(f"{rule}: conclusion {given.show()} does not match {expected.show()}")
    if given.mode == TOTAL and expected.mode != TOTAL:
        raise SchemaError(f"{rule}: premises only support partial correctness")
    return given


def _split_assign(s: Stmt) -> tuple[tuple[str, ...], tuple[Expr, ...], Stmt] | None:
    head, rest = (s.first, s.second) if isinstance(s, Seq) else (s, None)
    if isinstance(head, ParAssign):
        names, values = head.names, head.values
    elif isinstance(head, Assign) and isinstance(head.target, Var):
        names, values = (head.target.name,), (head.value,)
    else:
        return None
    return names, values, rest if rest is not None else Skip()


def exists_intro(var: str, body: Expr, is_array: bool) -> Expr:
    return ArrayExists(var, body) if is_array else Quant("exists", var, body)


# ---------------------------------------------------------------------------
# side conditions shared with the outline checker
# ---------------------------------------------------------------------------


def check_block_side(names: Iterable[str], post: Expr) -> None:
    bad = set(names) & free_vars(post)
    if bad:
        raise SideConditionError("BLOCK", "var(x) ∩ free(q) = ∅", bad)


def check_instantiate_side(decls, call_name: str, generic: Sequence[Expr], actuals: Sequence[Expr]) -> None:
    ds = _decls(decls)
    if not any(d.name == call_name for d in ds):
        raise SchemaError(f"INSTANTIATE: procedure {call_name} is not declared")
    if not all(isinstance(x, Var) for x in generic):
        raise SchemaError("INSTANTIATE: premise must be a generic call on simple variables")
    xs = {x.name for x in generic}
    if len(xs) != len(generic):
        raise SchemaError("INSTANTIATE: generic call variables must be distinct")
    if len(actuals) != len(generic):
        raise SchemaError("INSTANTIATE: wrong number of actual parameters")
    bad = xs & decls_vars(ds)
    if bad:
        raise SideConditionError("INSTANTIATE", "var(x) ∩ var(D) = ∅", bad)
    tv = frozenset().union(*(expr_vars(t) for t in actuals)) if actuals else frozenset()
    bad = tv & decls_change(ds)
    if bad:
        raise SideConditionError("INSTANTIATE", "var(t) ∩ change(D) = ∅", bad)


def check_invariance_side(rule: str, decls, stmt: Stmt, p: Expr) -> None:
    bad = free_vars(p) & changes(decls, stmt)
    if bad:
        raise SideConditionError(rule, "free(p) ∩ (change(D) ∪ change(S)) = ∅", bad)


def check_loop2_side(z: str, parts: Iterable[Expr], body: Stmt) -> None:
    occurs = any(z in expr_vars(e) for e in parts) or z in stmt_vars(body)
    if occurs:
        raise SideConditionError("LOOP_II", "z does not appear in p, B, t or S", {z})


# ---------------------------------------------------------------------------
# the rules
# ---------------------------------------------------------------------------


def derive(inst: RuleInstance, ctx: Mapping[str, Fact] | None = None, decls=None,
           constants: Iterable[str] = ()) -> tuple[Fact, list[VC]]:
    """Check one rule application and return ``(fact, vcs)``.

    ``constants`` lists recursion-II constants in force: EXISTS_INTRO and
    SUBST_RULE may not be applied to them.
    """
    ctx = ctx or {}
    consts = frozenset(constants)
    rule = inst.rule
    w = inst.witness
    facts = [_resolve(p, ctx) for p in inst.premises]
    origin = inst.origin or rule
    vcs: list[VC] = []

    def conclude(t: Triple, touched: Iterable[str] = ()) -> tuple[Fact, list[VC]]:
        t = _check_conclusion(t, inst.conclusion, rule)
        return Fact(t, **_join(facts, rule, touched)), [v for v in vcs if v is not None]

    c = inst.conclusion
    match rule:
        case "SKIP":
            _need(0, facts, rule)
            p = c.pre if c else w["post"]
            if c and (c.pre != c.post or not isinstance(c.stmt, Skip)):
                raise SchemaError("SKIP: conclusion must be {p} skip {p}")
            return Fact(Triple(p, Skip(), p, c.mode if c else w.get("mode", TOTAL)), rule=rule), []
        case "ASSIGN" | "PAR_ASSIGN":
            _need(0, facts, rule)
            stmt = c.stmt if c else w["stmt"]
            post = c.post if c else w["post"]
            if rule == "ASSIGN" and isinstance(stmt, Assign):
                pre = substitute(post, {stmt.target: stmt.value})
            elif rule == "PAR_ASSIGN" and isinstance(stmt, ParAssign):
                pre = substitute(post, dict(zip((Var(n) for n in stmt.names), stmt.values)))
            else:
                raise SchemaError(f"{rule}: wrong statement form")
            if c and c.pre != pre:
                raise SchemaError(f"{rule}: precondition must be {S.show(pre)}")
            return Fact(Triple(pre, stmt, post, c.mode if c else w.get("mode", TOTAL)), rule=rule), []
        case "COMP":
            _need(2, facts, rule)
            a, b = facts[0].triple, facts[1].triple
            if a.post != b.pre:
                raise SchemaError("COMP: intermediate assertions differ")
            return conclude(Triple(a.pre, Seq(a.stmt, b.stmt), b.post, _mode(facts)))
        case "COND":
            _need(2, facts, rule)
            a, b = facts[0].triple, facts[1].triple
            p = c.pre if c else w["pre"]
            cond = c.stmt.cond if c else w["cond"]
            if a.pre != S.conj([p, cond]) or b.pre != S.conj([p, S.neg(cond)]) or a.post != b.post:
                raise SchemaError("COND: premises must be {p∧B} S1 {q} and {p∧¬B} S2 {q}")
            return conclude(Triple(p, If(cond, a.stmt, b.stmt), a.post, _mode(facts)))
        case "LOOP":
            _need(1, facts, rule)
            a = facts[0].triple
            p = c.pre if c else w["inv"]
            cond = c.stmt.cond if c else w["cond"]
            if a.pre != S.conj([p, cond]) or a.post != p:
                raise SchemaError("LOOP: premise must be {p∧B} S {p}")
            return conclude(Triple(p, While(cond, a.stmt), S.conj([p, S.neg(cond)]), PARTIAL))
        case "LOOP_II":
            _need(2, facts, rule)
            a, b = facts[0].triple, facts[1].triple
            t, z = w["bound"], w["z"]
            p = c.pre if c else w["inv"]
            cond = c.stmt.cond if c else w["cond"]
            check_loop2_side(z, (p, cond, t), a.stmt)
            zv = Var(z)
            if a.pre != S.conj([p, cond]) or a.post != p:
                raise SchemaError("LOOP_II: first premise must be {p∧B} S {p}")
            if b.pre != S.conj([p, cond, S.eq(t, zv)]) or b.post != S.lt(t, zv) or b.stmt != a.stmt:
                raise SchemaError("LOOP_II: second premise must be {p∧B∧t=z} S {t<z}")
            vcs.append(make_vc(p, S.le(S.Int(0), t), f"{origin}: bound non-negative"))
            return conclude(Triple(p, While(cond, a.stmt), S.conj([p, S.neg(cond)]), _mode(facts)))
        case "CONSEQ":
            _need(1, facts, rule)
            a = facts[0].triple
            pre = c.pre if c else w.get("pre", a.pre)
            post = c.post if c else w.get("post", a.post)
            hint = w.get("hint")
            vcs.append(make_vc(pre, a.pre, f"{origin}: strengthen precondition", hint))
            vcs.append(make_vc(a.post, post, f"{origin}: weaken postcondition", hint))
            return conclude(Triple(pre, a.stmt, post, a.mode))
        case "INV_AXIOM":
            _need(0, facts, rule)
            p = c.pre if c else w["p"]
            stmt = c.stmt if c else w["stmt"]
            if c and (c.pre != c.post):
                raise SchemaError("INV_AXIOM: conclusion must be {p} S {p}")
            if c and c.mode == TOTAL:
                raise SchemaError("INV_AXIOM is not part of the total correctness systems")
            check_invariance_side(rule, decls, stmt, p)
            return Fact(Triple(p, stmt, p, PARTIAL), rule=rule), []
        case "DISJ":
            _need(2, facts, rule)
            a, b = facts[0].triple, facts[1].triple
            if a.stmt != b.stmt or a.post != b.post:
                raise SchemaError("DISJ: premises must share statement and postcondition")
            return conclude(Triple(S.disj(a.pre, b.pre), a.stmt, a.post, _mode(facts)))
        case "CONJ":
            _need(2, facts, rule)
            a, b = facts[0].triple, facts[1].triple
            if a.stmt != b.stmt:
                raise SchemaError("CONJ: premises must share the statement")
            return conclude(Triple(S.conj([a.pre, b.pre]), a.stmt, S.conj([a.post, b.post]), _mode(facts)))
        case "EXISTS_INTRO":
            _need(1, facts, rule)
            a = facts[0].triple
            x = w["var"]
            if x in consts:
                raise SideConditionError(rule, "z is treated as a constant", {x})
            bad = {x} & (changes(decls, a.stmt) | free_vars(a.post))
            if bad:
                raise SideConditionError(rule, "x ∉ change(D) ∪ change(S) ∪ free(q)", bad)
            pre = exists_intro(x, a.pre, bool(w.get("array")))
            return conclude(Triple(pre, a.stmt, a.post, a.mode), touched={x})
        case "INV_RULE":
            _need(1, facts, rule)
            a = facts[0].triple
            p = w["p"]
            check_invariance_side(rule, decls, a.stmt, p)
            return conclude(Triple(S.conj([p, a.pre]), a.stmt, S.conj([p, a.post]), a.mode))
        case "SUBST_RULE":
            _need(1, facts, rule)
            a = facts[0].triple
            m: Mapping[Expr, Expr] = w["map"]
            targets = {t.name if isinstance(t, Var) else t for t in m}
            hit = targets & consts
            if hit:
                raise SideConditionError(rule, "z is treated as a constant", hit)
            if not all(isinstance(t, Var) for t in m):
                raise SchemaError("SUBST_RULE substitutes simple variables only")
            touched = set(targets)
            vs = set(touched)
            for t in m.values():
                vs |= expr_vars(t)
            bad = vs & changes(decls, a.stmt)
            if bad:
                raise SideConditionError(rule, "(var(z) ∪ var(t)) ∩ (change(D) ∪ change(S)) = ∅", bad)
            return conclude(Triple(substitute(a.pre, m), a.stmt, substitute(a.post, m), a.mode),
                            touched=touched)
        case "BLOCK":
            _need(1, facts, rule)
            a = facts[0].triple
            parts = _split_assign(a.stmt)
            if parts is None:
                raise SchemaError("BLOCK: premise statement must start with x := t")
            names, values, body = parts
            check_block_side(names, a.post)
            return conclude(Triple(a.pre, Block(names, values, body), a.post, a.mode))
        case "INSTANTIATE":
            _need(1, facts, rule)
            a = facts[0].triple
            if not isinstance(a.stmt, Call):
                raise SchemaError("INSTANTIATE: premise must be about a procedure call")
            actuals = tuple(w["args"])
            check_instantiate_side(decls, a.stmt.name, a.stmt.args, actuals)
            m = dict(zip(a.stmt.args, actuals))
            return conclude(Triple(substitute(a.pre, m), Call(a.stmt.name, actuals),
                                   substitute(a.post, m), a.mode))
        case "RECURSION" | "MODULARITY" | "RECURSION_II":
            return _recursion(inst, facts, decls, consts)
        case "DECOMPOSE":
            _need(2, facts, rule)
            a, b = facts[0].triple, facts[1].triple
            if b.mode != TOTAL:
                raise SchemaError("DECOMPOSE: second premise must be a total correctness formula")
            if a.pre != b.pre or a.stmt != b.stmt or b.post != S.TRUE:
                raise SchemaError("DECOMPOSE: premises must be {p} S {q} and {p} S {true}")
            if facts[0].assumptions or facts[1].assumptions:
                raise SchemaError("DECOMPOSE: premises must be proven outright")
            return conclude(Triple(a.pre, a.stmt, a.post, TOTAL))
    raise SchemaError(f"unknown rule {rule}")


def _recursion(inst: RuleInstance, bodies: list[Fact], decls, consts) -> tuple[Fact, list[VC]]:
    """Discharge the named hypotheses ``w["hyps"]`` (name -> generic-call Triple).

    Each body fact must prove {p_i} begin local u_i := x_i; S_i end {q_i}
    (with p_i ∧ t = z for RECURSION_II) from the hypotheses, earlier facts
    (MODULARITY) and nothing else.
    """
    rule = inst.rule
    w = inst.witness
    hyps: dict[str, Triple] = dict(w["hyps"])
    earlier: frozenset[str] = frozenset(w.get("earlier", ()))
    dmap = {d.name: d for d in _decls(decls)}
    var_d = decls_vars(dmap.values())
    total = rule == "RECURSION_II"
    z = w.get("z")
    bounds: Mapping[str, Expr] = w.get("bounds", {})
    vcs: list[VC] = []
    if len(bodies) != len(hyps):
        raise SchemaError(f"{rule}: one body premise per hypothesis required")
    if rule == "MODULARITY" and not earlier:
        raise SchemaError("MODULARITY needs at least one previously established formula")
    out: list[Fact] = []
    for (name, h), body in zip(hyps.items(), bodies):
        if not isinstance(h.stmt, Call) or h.stmt.name not in dmap:
            raise SchemaError(f"{rule}: hypothesis {name} is not about a declared procedure")
        d = dmap[h.stmt.name]
        xs = h.stmt.args
        if not all(isinstance(x, Var) for x in xs) or len(xs) != len(d.formals):
            raise SchemaError(f"{rule}: hypothesis {name} must be a generic call")
        bad = {x.name for x in xs} & var_d
        if bad:
            raise SideConditionError(rule, "var(x) ∩ var(D) = ∅", bad)
        want_stmt = Block(d.formals, xs, d.body)
        bt = body.triple
        if bt.stmt != want_stmt:
            raise SchemaError(f"{rule}: body premise for {name} is not about begin local u := x; S end")
        pre = h.pre
        if total:
            t = bounds[name]
            for e in (h.pre, h.post, t):
                if z in expr_vars(e):
                    raise SideConditionError(rule, "z does not occur in p, t, q or S", {z})
            if z in stmt_vars(d.body):
                raise SideConditionError(rule, "z does not occur in p, t, q or S", {z})
            if z in body.touched:
                raise SideConditionError(rule, "z is treated as a constant", {z})
            pre = S.conj([h.pre, S.eq(t, Var(z))])
            vcs.append(make_vc(h.pre, S.le(S.Int(0), t), f"{name}: bound non-negative"))
            if bt.mode != TOTAL:
                raise SchemaError(f"{rule}: body premise for {name} must be total")
        if bt.pre != pre or bt.post != h.post:
            raise SchemaError(f"{rule}: body premise for {name} proves {bt.show()}")
        stray = body.assumptions - set(hyps) - earlier
        if stray:
            raise SchemaError(f"{rule}: body of {name} relies on unavailable formulas {sorted(stray)}")
        out.append(Fact(Triple(h.pre, h.stmt, h.post, TOTAL if total else PARTIAL),
                        frozenset(), body.touched - {z} if z else body.touched, rule))
    first = next(iter(hyps))
    wanted = w.get("conclude", first)
    idx = list(hyps).index(wanted)
    return out[idx], [v for v in vcs if v is not None]


def apply_rule(inst: RuleInstance, ctx: Mapping[str, Fact] | None = None, decls=None,
               constants: Iterable[str] = ()) -> tuple[Triple, list[VC]]:
    fact, vcs = derive(inst, ctx, decls, constants)
    return fact.triple, vcs
