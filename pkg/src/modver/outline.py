"""Proof-outline checking.

An outline is a statement interleaved with assertions.  The checker walks it
backwards: assignments are handled by the assignment axioms, compositions and
blocks by their rules, loops by LOOP (partial) or LOOP II (total), calls by
the fact a named derivation provides, and every pair of adjacent assertions
becomes a CONSEQUENCE obligation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from . import syntax as S
from .assertions import free_vars, substitute
from .lang import stmt_vars
from .proof import (
    PARTIAL, TOTAL, VC, Fact, ProofError, SchemaError, check_block_side, check_loop2_side,
    make_vc,
)
from .syntax import (
    Annot, Assign, Expr, OAtom, OBlock, OCall, OIf, OSeq, OWhile, ParAssign, Skip, Swap, Var,
)

ZREF = "@z"


class MissingAnnotation(ProofError):
    pass


class ContractNotInContext(ProofError):
    pass


@dataclass
class Scope:
    """What an outline may rely on."""

    program: S.Program
    mode: str = PARTIAL
    resolve: Callable[[str], Fact] | None = None  # name of derivation/contract -> fact
    candidates: tuple[Fact, ...] = ()  # facts usable for calls without `by`
    z: str | None = None  # recursion II constant, the meaning of @z outside loops
    label: str = "outline"
    fresh: list[int] = field(default_factory=lambda: [0])

    def new_z(self) -> str:
        self.fresh[0] += 1
        return f"_z{self.fresh[0]}"


@dataclass
class OutlineResult:
    pre: Expr
    vcs: list[VC]
    assumptions: frozenset[str]
    touched: frozenset[str]
    rules: list[str]


def expand_outline_swaps(o: OSeq, prefix: str = "sw") -> OSeq:
    """Replace swap atoms by annotated blocks, numbering temporaries like ``expand_macros``."""
    counter = [0]

    def go(node):
        match node:
            case OSeq(items):
                return OSeq(tuple(go(i) for i in items))
            case OAtom(Swap(u, v)):
                tmp = f"_{prefix}{counter[0]}"
                counter[0] += 1
                body = OSeq((OAtom(Assign(u, v), pos=node.pos), OAtom(Assign(v, Var(tmp)), pos=node.pos)))
                return OBlock((tmp,), (u,), body, pos=node.pos)
            case OIf(c, t, e):
                return OIf(c, go(t), go(e) if e is not None else None, pos=node.pos)
            case OWhile(c, b, inv, bound):
                return OWhile(c, go(b), inv, bound, pos=node.pos)
            case OBlock(ns, vs, b):
                return OBlock(ns, vs, go(b), pos=node.pos)
        return node

    return go(o)


class _Checker:
    def __init__(self, scope: Scope):
        self.scope = scope
        self.vcs: list[VC] = []
        self.assumptions: set[str] = set()
        self.touched: set[str] = set()
        self.rules: list[str] = []
        self.zstack: list[str] = []

    # -- helpers --------------------------------------------------------

    def where(self, pos) -> str:
        loc = f" at {pos[0]}:{pos[1]}" if pos else ""
        return f"{self.scope.label}{loc}"

    def vc(self, hyp: Expr, concl: Expr, what: str, pos, hint=None) -> None:
        v = make_vc(hyp, concl, f"{self.where(pos)}: {what}", hint)
        if v is not None:
            self.vcs.append(v)

    def resolve_z(self, e: Expr, pos) -> Expr:
        if ZREF not in free_vars(e):
            return e
        z = self.zstack[-1] if self.zstack else self.scope.z
        if z is None:
            raise SchemaError(f"{self.where(pos)}: @z used outside a loop or recursion II body")
        return substitute(e, {Var(ZREF): Var(z)})

    # -- traversal ------------------------------------------------------

    def seq(self, o: OSeq, post: Expr) -> Expr:
        items = o.items
        cur = post
        for k in range(len(items) - 1, -1, -1):
            item = items[k]
            prev = items[k - 1] if k > 0 and isinstance(items[k - 1], Annot) else None
            if isinstance(item, Annot):
                a = self.resolve_z(item.assertion, item.pos)
                self.vc(a, cur, "CONSEQ", item.pos)
                if a != cur:
                    self.rules.append("CONSEQ")
                cur = a
            else:
                hint = self.resolve_z(prev.assertion, prev.pos) if prev is not None else None
                cur = self.node(item, cur, hint)
        if len(items) > 1:
            self.rules.append("COMP")
        return cur

    def node(self, o, post: Expr, before: Expr | None) -> Expr:
        match o:
            case OAtom(Skip()):
                self.rules.append("SKIP")
                return post
            case OAtom(Assign(t, v)):
                self.rules.append("ASSIGN")
                return substitute(post, {t: v})
            case OAtom(ParAssign(ns, vs)):
                self.rules.append("PAR_ASSIGN")
                return substitute(post, dict(zip((Var(n) for n in ns), vs)))
            case OIf(c, then, else_):
                self.rules.append("COND")
                pt = self.seq(then, post)
                pe = self.seq(else_, post) if else_ is not None else post
                if before is None:
                    if pt == pe:
                        return pt
                    return S.conj([S.implies(c, pt), S.implies(S.neg(c), pe)])
                self.vc(S.conj([before, c]), pt, "COND then-branch", o.pos)
                what = "COND else-branch" if else_ is not None else "COND implicit else"
                self.vc(S.conj([before, S.neg(c)]), pe, what, o.pos)
                return before
            case OWhile(c, body, inv, bound):
                inv = self.resolve_z(inv, o.pos) if inv is not None else before
                if inv is None:
                    raise MissingAnnotation(f"{self.where(o.pos)}: loop needs an invariant")
                self.vc(S.conj([inv, S.neg(c)]), post, "LOOP exit", o.pos)
                if self.scope.mode == TOTAL:
                    if bound is None:
                        raise MissingAnnotation(f"{self.where(o.pos)}: total correctness loop needs a bound")
                    self.rules.append("LOOP_II")
                    t = self.resolve_z(bound, o.pos)
                    z = self.scope.new_z()
                    check_loop2_side(z, (inv, c, t), S.strip(body))
                    zv = Var(z)
                    self.zstack.append(z)
                    pb = self.seq(body, S.conj([inv, S.lt(t, zv)]))
                    self.zstack.pop()
                    self.vc(S.conj([inv, c, S.eq(t, zv)]), pb, "LOOP_II body entry", o.pos)
                    self.vc(inv, S.le(S.Int(0), t), "LOOP_II bound non-negative", o.pos)
                else:
                    self.rules.append("LOOP")
                    pb = self.seq(body, inv)
                    self.vc(S.conj([inv, c]), pb, "LOOP body entry", o.pos)
                return inv
            case OBlock(ns, vs, body):
                self.rules.append("BLOCK")
                try:
                    check_block_side(ns, post)
                except ProofError as exc:
                    raise type(exc)(exc.rule, exc.condition, exc.offending, self.where(o.pos)) from None
                pb = self.seq(body, post)
                self.rules.append("PAR_ASSIGN")
                return substitute(pb, dict(zip((Var(n) for n in ns), vs)))
            case OCall(call, by):
                fact = self.fact_for(call, by, o.pos)
                t = fact.triple
                if self.scope.mode == TOTAL and t.mode != TOTAL:
                    raise SchemaError(f"{self.where(o.pos)}: partial fact used in a total correctness proof")
                self.assumptions |= fact.assumptions
                self.touched |= fact.touched
                self.vc(t.post, post, f"CONSEQ after call {call.name}", o.pos)
                return t.pre
        raise SchemaError(f"{self.where(getattr(o, 'pos', None))}: unexpected outline node {o!r}")

    def fact_for(self, call: S.Call, by: str | None, pos) -> Fact:
        if by is not None:
            if self.scope.resolve is None:
                raise ContractNotInContext(f"{self.where(pos)}: no derivations available for {by}")
            fact = self.scope.resolve(by)
            if fact.triple.stmt != call:
                raise SchemaError(
                    f"{self.where(pos)}: {by} is about {S.summary(fact.triple.stmt)}, not {S.summary(call)}")
            return fact
        matches = [f for f in self.scope.candidates if f.triple.stmt == call]
        if len(matches) == 1:
            return matches[0]
        if not matches:
            raise ContractNotInContext(f"{self.where(pos)}: no formula about {S.summary(call)} in context")
        raise MissingAnnotation(f"{self.where(pos)}: several formulas about {S.summary(call)}; name one with `by`")


def check_outline(outline: OSeq, post: Expr, scope: Scope, pre: Expr | None = None,
                  expected: S.Stmt | None = None, swap_prefix: str = "sw") -> OutlineResult:
    """Check ``{pre} outline {post}``; returns the VCs and the computed precondition.

    When ``pre`` is given, the obligation ``pre -> computed`` is added.  When
    ``expected`` is given, the outline's statement must equal it.
    """
    o = expand_outline_swaps(outline, swap_prefix)
    if expected is not None and S.strip(o) != expected:
        raise SchemaError(f"{scope.label}: outline statement differs from the expected program")
    ck = _Checker(scope)
    computed = ck.seq(o, post)
    if pre is not None:
        ck.vc(pre, computed, "CONSEQ at entry", None)
        computed = pre
    return OutlineResult(computed, ck.vcs, frozenset(ck.assumptions), frozenset(ck.touched), ck.rules)


def outline_vars(outline: OSeq) -> frozenset[str]:
    return stmt_vars(S.strip(outline))
