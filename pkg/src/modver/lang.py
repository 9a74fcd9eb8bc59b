"""Static analysis of programs: macro expansion, var/change sets, typing and
well-formedness (including the local/global name-clash restriction)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from . import syntax as S
from .syntax import (
    ArrayExists, Assign, Binary, Block, Bool, Call, Cond, Decl, Expr, If, Index, Int,
    ParAssign, Perm, Program, Quant, Seq, Skip, Sorted, Stmt, Store, Swap, Unary, Var, While,
)


class MacroError(Exception):
    pass


# ---------------------------------------------------------------------------
# swap expansion
# ---------------------------------------------------------------------------


def swap_temp(prefix: str, k: int) -> str:
    return f"_{prefix}{k}"


def expand_macros(stmt: Stmt, prefix: str = "sw", start: int = 0) -> Stmt:
    """Replace every ``swap(u, v)`` by a block exchanging u and v through a
    reserved temporary ``_sw<k>``; temporaries are numbered in textual order."""
    counter = [start]

    def go(s: Stmt) -> Stmt:
        match s:
            case Swap(u, v):
                for t in (u, v):
                    if not (isinstance(t, Var) or (isinstance(t, Index) and isinstance(t.array, Var))):
                        raise MacroError(f"swap argument is not a variable: {S.show(t)}")
                tmp = swap_temp(prefix, counter[0])
                counter[0] += 1
                return Block((tmp,), (u,), Seq(Assign(u, v), Assign(v, Var(tmp))), pos=s.pos)
            case Seq(a, b):
                return Seq(go(a), go(b), pos=s.pos)
            case If(c, a, b):
                return If(c, go(a), go(b), pos=s.pos)
            case While(c, b):
                return While(c, go(b), pos=s.pos)
            case Block(ns, vs, b):
                return Block(ns, vs, go(b), pos=s.pos)
        return s

    return go(stmt)


def expand_program(prog: Program) -> Program:
    decls = tuple(S.Decl(d.name, d.formals, expand_macros(d.body), pos=d.pos) for d in prog.decls)
    main = expand_macros(prog.main, prefix="swm") if prog.main is not None else None
    return Program(decls, main)


# ---------------------------------------------------------------------------
# var / change
# ---------------------------------------------------------------------------


def expr_vars(e: Expr) -> frozenset[str]:
    """All simple and array variables occurring in an expression (free ones for
    assertions; quantified variables are excluded)."""
    match e:
        case Int() | Bool():
            return frozenset()
        case Var(n):
            return frozenset((n,))
        case Index(a, i):
            return expr_vars(a) | expr_vars(i)
        case Store(a, i, v):
            return expr_vars(a) | expr_vars(i) | expr_vars(v)
        case Unary(_, a):
            return expr_vars(a)
        case Binary(_, l, r):
            return expr_vars(l) | expr_vars(r)
        case Cond(c, t, f):
            return expr_vars(c) | expr_vars(t) | expr_vars(f)
        case Quant(_, v, body, lo, hi):
            out = expr_vars(body) - {v}
            if lo is not None:
                out |= expr_vars(lo) | expr_vars(hi)
            return out
        case ArrayExists(v, body):
            return expr_vars(body) - {v}
        case Sorted(a, lo, hi):
            return expr_vars(a) | expr_vars(lo) | expr_vars(hi)
        case Perm(a, b, lo, hi):
            return expr_vars(a) | expr_vars(b) | expr_vars(lo) | expr_vars(hi)
    raise TypeError(f"not an expression: {e!r}")


def _union(sets: Iterable[frozenset[str]]) -> frozenset[str]:
    out: frozenset[str] = frozenset()
    for s in sets:
        out |= s
    return out


def stmt_vars(s: Stmt) -> frozenset[str]:
    match s:
        case Skip():
            return frozenset()
        case Assign(t, v):
            return expr_vars(t) | expr_vars(v)
        case ParAssign(ns, vs):
            return frozenset(ns) | _union(map(expr_vars, vs))
        case Seq(a, b):
            return stmt_vars(a) | stmt_vars(b)
        case If(c, a, b):
            return expr_vars(c) | stmt_vars(a) | stmt_vars(b)
        case While(c, b):
            return expr_vars(c) | stmt_vars(b)
        case Block(ns, vs, b):
            return frozenset(ns) | _union(map(expr_vars, vs)) | stmt_vars(b)
        case Call(_, args):
            return _union(map(expr_vars, args))
        case Swap(u, v):
            return expr_vars(u) | expr_vars(v)
    raise TypeError(f"not a statement: {s!r}")


def change(s: Stmt) -> frozenset[str]:
    match s:
        case Skip() | Call():
            return frozenset()
        case Assign(Var(n), _) | Assign(Index(Var(n), _), _):
            return frozenset((n,))
        case ParAssign(ns, _):
            return frozenset(ns)
        case Seq(a, b) | If(_, a, b):
            return change(a) | change(b)
        case While(_, b):
            return change(b)
        case Block(ns, _, b):
            return change(b) - set(ns)
        case Swap(u, v):
            return change(Assign(u, v)) | change(Assign(v, u))
    raise TypeError(f"not a statement: {s!r}")


def decl_change(d: Decl) -> frozenset[str]:
    return change(d.body) - set(d.formals)


def decls_change(decls: Iterable[Decl]) -> frozenset[str]:
    return _union(decl_change(d) for d in decls)


def decl_vars(d: Decl) -> frozenset[str]:
    return frozenset(d.formals) | stmt_vars(d.body)


def decls_vars(decls: Iterable[Decl]) -> frozenset[str]:
    return _union(decl_vars(d) for d in decls)


def program_sets(unit) -> tuple[frozenset[str], frozenset[str]]:
    """``(var, change)`` of a statement, declaration, or collection of declarations."""
    if isinstance(unit, Decl):
        return decl_vars(unit), decl_change(unit)
    if isinstance(unit, Stmt):
        return stmt_vars(unit), change(unit)
    if isinstance(unit, Program):
        unit = unit.decls
    decls = list(unit)
    return decls_vars(decls), decls_change(decls)


def block_locals(s: Stmt) -> frozenset[str]:
    match s:
        case Block(ns, _, b):
            return frozenset(ns) | block_locals(b)
        case Seq(a, b) | If(_, a, b):
            return block_locals(a) | block_locals(b)
        case While(_, b):
            return block_locals(b)
    return frozenset()


def calls_in(s: Stmt) -> list[Call]:
    match s:
        case Call():
            return [s]
        case Seq(a, b) | If(_, a, b):
            return calls_in(a) + calls_in(b)
        case While(_, b) | Block(_, _, b):
            return calls_in(b)
    return []


# ---------------------------------------------------------------------------
# typing
# ---------------------------------------------------------------------------

INT, BOOL, ARRAY = "int", "bool", "array"


@dataclass
class TypeEnv:
    types: dict[str, str] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    def bind(self, name: str, ty: str | None, bound: dict[str, str]) -> str | None:
        if name in bound:
            have = bound[name]
        else:
            have = self.types.get(name)
        if ty is None:
            return have
        if have is None:
            self.types[name] = ty
        elif have != ty:
            msg = f"variable {name} used as {ty} but also as {have}"
            if msg not in self.errors:
                self.errors.append(msg)
        return ty

    def expect(self, e: Expr, ty: str | None, bound: dict[str, str] | None = None) -> str | None:
        """Check ``e`` against ``ty`` (None = unknown); return the type found."""
        bound = bound or {}
        got: str | None
        match e:
            case Int():
                got = INT
            case Bool():
                got = BOOL
            case Var(n):
                return self.bind(n, ty, bound)
            case Index(a, i):
                self.expect(a, ARRAY, bound)
                self.expect(i, INT, bound)
                got = INT
            case Store(a, i, v):
                self.expect(a, ARRAY, bound)
                self.expect(i, INT, bound)
                self.expect(v, INT, bound)
                got = ARRAY
            case Unary("neg", a):
                self.expect(a, INT, bound)
                got = INT
            case Unary("not", a):
                self.expect(a, BOOL, bound)
                got = BOOL
            case Binary("+" | "-" | "*" | "max" | "min", l, r):
                self.expect(l, INT, bound)
                self.expect(r, INT, bound)
                got = INT
            case Binary("<" | "<=", l, r):
                self.expect(l, INT, bound)
                self.expect(r, INT, bound)
                got = BOOL
            case Binary("=", l, r):
                tl = self.expect(l, None, bound)
                tr = self.expect(r, tl, bound)
                if tl is None and tr is not None:
                    self.expect(l, tr, bound)
                got = BOOL
            case Binary(_, l, r):
                self.expect(l, BOOL, bound)
                self.expect(r, BOOL, bound)
                got = BOOL
            case Cond(c, t, f):
                self.expect(c, BOOL, bound)
                tt = self.expect(t, ty, bound)
                got = self.expect(f, tt, bound) or tt
            case Quant(_, v, body, lo, hi):
                if lo is not None:
                    self.expect(lo, INT, bound)
                    self.expect(hi, INT, bound)
                self.expect(body, BOOL, {**bound, v: INT})
                got = BOOL
            case ArrayExists(v, body):
                self.expect(body, BOOL, {**bound, v: ARRAY})
                got = BOOL
            case Sorted(a, lo, hi):
                self.expect(a, ARRAY, bound)
                self.expect(lo, INT, bound)
                self.expect(hi, INT, bound)
                got = BOOL
            case Perm(a, b, lo, hi):
                self.expect(a, ARRAY, bound)
                self.expect(b, ARRAY, bound)
                self.expect(lo, INT, bound)
                self.expect(hi, INT, bound)
                got = BOOL
            case _:
                raise TypeError(f"not an expression: {e!r}")
        if ty is not None and got is not None and ty != got:
            msg = f"expression {S.show(e)} has type {got}, expected {ty}"
            if msg not in self.errors:
                self.errors.append(msg)
        return got

    def stmt(self, s: Stmt, decls: dict[str, Decl]) -> None:
        match s:
            case Assign(t, v):
                tt = self.expect(t, None)
                tv = self.expect(v, tt)
                if tt is None and tv is not None:
                    self.expect(t, tv)
            case ParAssign(ns, vs) | Block(ns, vs, _):
                for n, v in zip(ns, vs):
                    tv = self.expect(v, self.types.get(n))
                    if tv is not None:
                        self.bind(n, tv, {})
                if isinstance(s, Block):
                    self.stmt(s.body, decls)
            case Seq(a, b):
                self.stmt(a, decls)
                self.stmt(b, decls)
            case If(c, a, b):
                self.expect(c, BOOL)
                self.stmt(a, decls)
                self.stmt(b, decls)
            case While(c, b):
                self.expect(c, BOOL)
                self.stmt(b, decls)
            case Call(name, args):
                d = decls.get(name)
                if d is not None and len(d.formals) == len(args):
                    for u, t in zip(d.formals, args):
                        tt = self.expect(t, self.types.get(u))
                        if tt is not None:
                            self.bind(u, tt, {})
            case Swap(u, v):
                self.stmt(Assign(u, v), decls)


def infer_types(program: Program | None = None, exprs: Iterable[Expr] = ()) -> TypeEnv:
    """Infer a type for every variable from its uses; unconstrained ones default to int."""
    env = TypeEnv()
    exprs = list(exprs)
    decls = program.decl_map if program is not None else {}
    for _ in range(3):  # propagate through '=' and calls whose operands resolve late
        if program is not None:
            for d in program.decls:
                env.stmt(d.body, decls)
            if program.main is not None:
                env.stmt(program.main, decls)
        for e in exprs:
            env.expect(e, BOOL)
    return env


# ---------------------------------------------------------------------------
# well-formedness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str  # duplicate-decl | formals | undeclared | arity | vars | name-clash | type | syntax
    message: str
    pos: tuple[int, int] | None = None


@dataclass
class WellFormedness:
    violations: list[Violation]

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set[str]:
        return {v.kind for v in self.violations}

    def format(self, filename: str = "<input>") -> str:
        lines = []
        for v in self.violations:
            line, col = v.pos or (0, 0)
            lines.append(f"{filename}:{line}:{col}: {v.kind}: {v.message}")
        return "\n".join(lines)


def _internal_terms(e: Expr) -> bool:
    match e:
        case Cond() | Quant() | ArrayExists() | Sorted() | Perm() | Store():
            return True
        case Index(a, i):
            return _internal_terms(a) or _internal_terms(i)
        case Unary(_, a):
            return _internal_terms(a)
        case Binary(_, l, r):
            return _internal_terms(l) or _internal_terms(r)
    return False


def _stmt_exprs(s: Stmt) -> list[tuple[Expr, S.Pos]]:
    match s:
        case Assign(t, v):
            return [(t, s.pos), (v, s.pos)]
        case ParAssign(_, vs) | Call(_, vs):
            return [(v, s.pos) for v in vs]
        case Block(_, vs, b):
            return [(v, s.pos) for v in vs] + _stmt_exprs(b)
        case Seq(a, b):
            return _stmt_exprs(a) + _stmt_exprs(b)
        case If(c, a, b):
            return [(c, s.pos)] + _stmt_exprs(a) + _stmt_exprs(b)
        case While(c, b):
            return [(c, s.pos)] + _stmt_exprs(b)
    return []


def _var_lists(s: Stmt) -> list[tuple[tuple[str, ...], S.Pos]]:
    match s:
        case ParAssign(ns, _):
            return [(ns, s.pos)]
        case Block(ns, _, b):
            return [(ns, s.pos)] + _var_lists(b)
        case Seq(a, b) | If(_, a, b):
            return _var_lists(a) + _var_lists(b)
        case While(_, b):
            return _var_lists(b)
    return []


def well_formed(program: Program) -> WellFormedness:
    out: list[Violation] = []
    seen: set[str] = set()
    for d in program.decls:
        if d.name in seen:
            out.append(Violation("duplicate-decl", f"procedure {d.name} declared twice", d.pos))
        seen.add(d.name)
        if len(set(d.formals)) != len(d.formals):
            out.append(Violation("formals", f"formal parameters of {d.name} are not distinct", d.pos))
    decls = program.decl_map
    bodies = [d.body for d in program.decls] + ([program.main] if program.main is not None else [])
    for body in bodies:
        for c in calls_in(body):
            d = decls.get(c.name)
            if d is None:
                out.append(Violation("undeclared", f"call of undeclared procedure {c.name}", c.pos))
            elif len(d.formals) != len(c.args):
                out.append(Violation(
                    "arity",
                    f"{c.name} expects {len(d.formals)} argument(s), call passes {len(c.args)}",
                    c.pos))
        for names, pos in _var_lists(body):
            if not names or len(set(names)) != len(names):
                out.append(Violation("vars", "variable list is empty or has repetitions", pos))
        for e, pos in _stmt_exprs(body):
            if _internal_terms(e):
                out.append(Violation("syntax", f"assertion-only construct in program: {S.show(e)}", pos))
    if program.main is not None:
        clash = block_locals(program.main) & decls_vars(program.decls)
        if clash:
            out.append(Violation(
                "name-clash",
                f"local variable(s) {', '.join(sorted(clash))} of the main program occur in the declarations",
                program.main.pos))
    env = infer_types(program)
    for msg in env.errors:
        out.append(Violation("type", msg))
    return WellFormedness(out)
