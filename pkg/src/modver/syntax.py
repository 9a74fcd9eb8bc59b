"""Abstract syntax for the while-language with blocks and call-by-value procedures.

Expressions and assertions share one node family: an assertion is a boolean
expression that may additionally use quantifiers and the ``sorted``/``perm``
built-ins.  All nodes are frozen dataclasses, so structural equality and
hashing come for free.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

Pos = Union[tuple[int, int], None]


# ---------------------------------------------------------------------------
# Expressions and assertions
# ---------------------------------------------------------------------------


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Int(Expr):
    value: int


@dataclass(frozen=True)
class Bool(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Index(Expr):
    """Subscripted variable ``array[index]``; ``array`` is a Var or a Store."""

    array: Expr
    index: Expr


@dataclass(frozen=True)
class Store(Expr):
    """Array-valued term: ``array`` with position ``index`` overwritten by ``value``.

    Only produced by substitution of a subscripted target.
    """

    array: Expr
    index: Expr
    value: Expr


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "neg" | "not"
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str  # + - * max min < <= = and or ->
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Cond(Expr):
    """Conditional term; appears only as substitution output."""

    cond: Expr
    then: Expr
    else_: Expr


@dataclass(frozen=True)
class Quant(Expr):
    """Integer quantifier, optionally bounded to the interval ``[lo:hi]``."""

    kind: str  # "forall" | "exists"
    var: str
    body: Expr
    lo: Expr | None = None
    hi: Expr | None = None


@dataclass(frozen=True)
class ArrayExists(Expr):
    var: str
    body: Expr


@dataclass(frozen=True)
class Sorted(Expr):
    array: Expr
    lo: Expr
    hi: Expr


@dataclass(frozen=True)
class Perm(Expr):
    """``perm(a, b, [lo:hi])``: a[lo:hi] permutes b[lo:hi] and a, b agree elsewhere."""

    left: Expr
    right: Expr
    lo: Expr
    hi: Expr


Assertion = Expr

TRUE = Bool(True)
FALSE = Bool(False)

ARITH_OPS = ("+", "-", "*", "max", "min")
COMPARE_OPS = ("<", "<=", "=")
LOGIC_OPS = ("and", "or", "->")


def conj(parts: Iterable[Expr]) -> Expr:
    """Right-nested conjunction; ``true`` conjuncts are dropped."""
    items = [p for p in parts if p != TRUE]
    if not items:
        return TRUE
    out = items[-1]
    for p in reversed(items[:-1]):
        out = Binary("and", p, out)
    return out


def conjuncts(p: Expr) -> list[Expr]:
    """Flatten nested conjunctions, dropping ``true``."""
    if isinstance(p, Binary) and p.op == "and":
        return conjuncts(p.left) + conjuncts(p.right)
    if p == TRUE:
        return []
    return [p]


def disj(a: Expr, b: Expr) -> Expr:
    return Binary("or", a, b)


def implies(a: Expr, b: Expr) -> Expr:
    return Binary("->", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Unary) and a.op == "not":
        return a.arg
    return Unary("not", a)


def lt(a: Expr, b: Expr) -> Expr:
    return Binary("<", a, b)


def le(a: Expr, b: Expr) -> Expr:
    return Binary("<=", a, b)


def eq(a: Expr, b: Expr) -> Expr:
    return Binary("=", a, b)


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Stmt):
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assign(Stmt):
    target: Expr  # Var or Index(Var, _)
    value: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ParAssign(Stmt):
    names: tuple[str, ...]
    values: tuple[Expr, ...]
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then: Stmt
    else_: Stmt
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    body: Stmt
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Block(Stmt):
    names: tuple[str, ...]
    values: tuple[Expr, ...]
    body: Stmt
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call(Stmt):
    name: str
    args: tuple[Expr, ...]
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Swap(Stmt):
    """``swap(u, v)`` before macro expansion."""

    left: Expr
    right: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


def seq(stmts: Iterable[Stmt]) -> Stmt:
    items = list(stmts)
    if not items:
        return Skip()
    out = items[-1]
    for s in reversed(items[:-1]):
        out = Seq(s, out)
    return out


def flatten_seq(s: Stmt) -> list[Stmt]:
    if isinstance(s, Seq):
        return flatten_seq(s.first) + flatten_seq(s.second)
    return [s]


@dataclass(frozen=True)
class Decl:
    name: str
    formals: tuple[str, ...]
    body: Stmt
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Program:
    decls: tuple[Decl, ...]
    main: Stmt | None = None

    def decl(self, name: str) -> Decl:
        for d in self.decls:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def decl_map(self) -> dict[str, Decl]:
        return {d.name: d for d in self.decls}


# ---------------------------------------------------------------------------
# Printing (output is accepted back by the parser)
# ---------------------------------------------------------------------------

_PREC = {"->": 1, "or": 2, "and": 3, "<": 5, "<=": 5, "=": 5, "+": 6, "-": 6, "*": 7}


def _prec(e: Expr) -> int:
    if isinstance(e, (Quant, ArrayExists)):
        return 0
    if isinstance(e, Binary) and e.op in _PREC:
        return _PREC[e.op]
    if isinstance(e, Unary):
        return 4 if e.op == "not" else 8
    return 9


def show(e: Expr) -> str:
    """Render an expression or assertion in concrete syntax."""
    match e:
        case Int(v):
            return str(v) if v >= 0 else f"-{-v}"
        case Bool(v):
            return "true" if v else "false"
        case Var(n):
            return n
        case Index(a, i):
            return f"{show(a)}[{show(i)}]"
        case Store(a, i, v):
            return f"store({show(a)}, {show(i)}, {show(v)})"
        case Unary("not", a):
            return "not " + _wrap(a, 4)
        case Unary("neg", a):
            return "-" + _wrap(a, 9)
        case Binary("max" | "min" as op, l, r):
            return f"{op}({show(l)}, {show(r)})"
        case Binary(op, l, r):
            p = _PREC[op]
            if op == "->":
                return f"{_wrap(l, p + 1)} -> {_wrap(r, p)}"
            if op in ("<", "<=", "="):
                return f"{_wrap(l, p + 1)} {op} {_wrap(r, p + 1)}"
            return f"{_wrap(l, p)} {op} {_wrap(r, p + 1)}"
        case Cond(c, t, f):
            return f"({show(c)} ? {show(t)} : {show(f)})"
        case Quant(k, v, body, None, None):
            return f"{k} {v}: {show(body)}"
        case Quant(k, v, body, lo, hi):
            return f"{k} {v} in [{show(lo)}:{show(hi)}]: {show(body)}"
        case ArrayExists(v, body):
            return f"exists array {v}: {show(body)}"
        case Sorted(a, lo, hi):
            return f"sorted({show(a)}[{show(lo)}:{show(hi)}])"
        case Perm(a, b, lo, hi):
            return f"perm({show(a)}, {show(b)}, [{show(lo)}:{show(hi)}])"
    raise TypeError(f"not an expression: {e!r}")


def _wrap(e: Expr, min_prec: int) -> str:
    s = show(e)
    return s if _prec(e) >= min_prec else f"({s})"


def show_stmt(s: Stmt, indent: int = 0) -> str:
    pad = "  " * indent
    match s:
        case Skip():
            return pad + "skip"
        case Assign(t, v):
            return f"{pad}{show(t)} := {show(v)}"
        case ParAssign(ns, vs):
            return f"{pad}{', '.join(ns)} := {', '.join(show(v) for v in vs)}"
        case Seq():
            return ";\n".join(show_stmt(x, indent) for x in flatten_seq(s))
        case If(c, t, Skip()):
            return f"{pad}if {show(c)} then\n{show_stmt(t, indent + 1)}\n{pad}fi"
        case If(c, t, f):
            return (f"{pad}if {show(c)} then\n{show_stmt(t, indent + 1)}\n{pad}else\n"
                    f"{show_stmt(f, indent + 1)}\n{pad}fi")
        case While(c, b):
            return f"{pad}while {show(c)} do\n{show_stmt(b, indent + 1)}\n{pad}od"
        case Block(ns, vs, b):
            return (f"{pad}begin local {', '.join(ns)} := {', '.join(show(v) for v in vs)};\n"
                    f"{show_stmt(b, indent + 1)}\n{pad}end")
        case Call(n, args):
            return f"{pad}{n}({', '.join(show(a) for a in args)})"
        case Swap(u, v):
            return f"{pad}swap({show(u)}, {show(v)})"
    raise TypeError(f"not a statement: {s!r}")


def summary(s: Stmt | None, width: int = 60) -> str:
    """One-line rendering of a statement, truncated."""
    if s is None:
        return "E"
    text = " ".join(show_stmt(s).split())
    return text if len(text) <= width else text[: width - 3] + "..."


def show_decl(d: Decl) -> str:
    head = f"{d.name}({', '.join(d.formals)})" if d.formals else d.name
    return f"{head} ::\n{show_stmt(d.body, 1)}"


def show_program(p: Program) -> str:
    parts = [show_decl(d) for d in p.decls]
    if p.main is not None:
        parts.append("main ::\n" + show_stmt(p.main, 1))
    return "\n\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# Proof outlines: statements interleaved with assertion annotations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Annot:
    assertion: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class OSeq:
    items: tuple  # of Annot | OAtom | OIf | OWhile | OBlock | OCall


@dataclass(frozen=True)
class OAtom:
    """skip, assignment, parallel assignment or (unexpanded) swap."""

    stmt: Stmt
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class OIf:
    cond: Expr
    then: OSeq
    else_: OSeq | None
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class OWhile:
    cond: Expr
    body: OSeq
    inv: Expr | None = None
    bound: Expr | None = None
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class OBlock:
    names: tuple[str, ...]
    values: tuple[Expr, ...]
    body: OSeq
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class OCall:
    call: Call
    by: str | None = None
    pos: Pos = field(default=None, compare=False, repr=False)


def strip(o) -> Stmt:
    """Drop annotations, giving back the plain statement."""
    match o:
        case OSeq(items):
            return seq(strip(i) for i in items if not isinstance(i, Annot))
        case OAtom(s):
            return s
        case OIf(c, t, e):
            return If(c, strip(t), strip(e) if e is not None else Skip(), pos=o.pos)
        case OWhile(c, b):
            return While(c, strip(b), pos=o.pos)
        case OBlock(ns, vs, b):
            return Block(ns, vs, strip(b), pos=o.pos)
        case OCall(c):
            return c
    raise TypeError(f"not an outline node: {o!r}")


def has_annotations(o) -> bool:
    match o:
        case OSeq(items):
            return any(isinstance(i, Annot) or has_annotations(i) for i in items)
        case OIf(_, t, e):
            return has_annotations(t) or (e is not None and has_annotations(e))
        case OWhile(_, b, inv, bound):
            return inv is not None or bound is not None or has_annotations(b)
        case OBlock(_, _, b):
            return has_annotations(b)
        case OCall(_, by):
            return by is not None
    return False
