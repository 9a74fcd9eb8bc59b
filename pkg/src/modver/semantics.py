"""Small-step operational semantics with the block and call transition axioms.

``step`` rewrites configurations structurally, exactly as the transition
axioms read.  ``run`` computes the same transition sequence with an explicit
continuation stack (a sequential composition is a stack push) and counts
steps identically, which keeps long runs cheap.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Mapping

from .assertions import array_set, as_array, eval_expr
from .syntax import (
    Assign, Binary, Block, Bool, Call, Decl, Expr, If, Index, Int, ParAssign, Seq, Skip, Stmt,
    Unary, Var, While, seq,
)

DEFAULT_FUEL = 10**6


def _is_default(v) -> bool:
    return v is False or v == 0 or v == {}


@dataclass(frozen=True, eq=False)
class State:
    """Total valuation: unmapped simple variables read 0/false, arrays all-zero."""

    vals: Mapping[str, object] = field(default_factory=dict)

    def get(self, name: str):
        return self.vals.get(name, 0)

    def array(self, name: str) -> dict[int, int]:
        return as_array(self.vals.get(name))

    def set(self, name: str, value) -> "State":
        d = dict(self.vals)
        d[name] = value
        return State(d)

    def env(self) -> dict[str, object]:
        return dict(self.vals)

    def normalized(self) -> dict[str, object]:
        return {k: v for k, v in self.vals.items() if not _is_default(v)}

    def agrees(self, other: "State", names) -> bool:
        for n in names:
            a, b = self.vals.get(n, 0), other.vals.get(n, 0)
            if isinstance(a, dict) or isinstance(b, dict):
                if as_array(a) != as_array(b):
                    return False
            elif a != b:
                return False
        return True

    def __eq__(self, other) -> bool:
        return isinstance(other, State) and self.normalized() == other.normalized()

    def __hash__(self) -> int:
        return hash(show_state(self))

    @staticmethod
    def parse(text: str) -> "State":
        return parse_state(text)

    def __repr__(self) -> str:
        return f"State({show_state(self)})"


def make_array(items) -> dict[int, int]:
    return {i: int(x) for i, x in enumerate(items) if x != 0}


def array_list(arr: Mapping[int, int], lo: int = 0, hi: int | None = None) -> list[int]:
    if hi is None:
        hi = max((k for k in arr if k >= lo), default=lo - 1)
    return [arr.get(i, 0) for i in range(lo, hi + 1)]


_ASSIGN_RE = re.compile(r"\s*([A-Za-z][A-Za-z0-9_]*'*)\s*=\s*(\[[^\]]*\]|-?\d+|true|false)\s*(?:[;,]|$)")


def parse_state(text: str) -> State:
    """Parse ``name=value`` pairs separated by ``;`` or ``,``; arrays are ``[v0, v1, ...]``."""
    vals: dict[str, object] = {}
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _ASSIGN_RE.match(text, pos)
        if m is None:
            raise ValueError(f"cannot parse state near {text[pos:]!r}")
        name, raw = m.group(1), m.group(2)
        if raw.startswith("["):
            inner = raw[1:-1].strip()
            vals[name] = make_array(int(x) for x in inner.split(",")) if inner else {}
        elif raw in ("true", "false"):
            vals[name] = raw == "true"
        else:
            vals[name] = int(raw)
        pos = m.end()
    return State(vals)


def show_value(v) -> str:
    if isinstance(v, dict):
        return "[" + ", ".join(map(str, array_list(v, 0))) + "]" if all(k >= 0 for k in v) else \
            "{" + ", ".join(f"{k}: {v[k]}" for k in sorted(v)) + "}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def show_state(s: State | Mapping[str, object]) -> str:
    vals = s.vals if isinstance(s, State) else s
    return "; ".join(f"{k}={show_value(vals[k])}" for k in sorted(vals))


# ---------------------------------------------------------------------------
# configurations and outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Configuration:
    stmt: Stmt | None  # None is the empty statement E
    state: State

    @property
    def terminal(self) -> bool:
        return self.stmt is None


@dataclass(frozen=True)
class Terminated:
    final: State
    steps: int = 0


@dataclass(frozen=True)
class OutOfFuel:
    last: Configuration
    steps: int = 0


@dataclass(frozen=True)
class Stuck:
    reason: str
    steps: int = 0


Outcome = Terminated | OutOfFuel | Stuck


class StuckError(Exception):
    pass


def literal(v) -> Expr:
    if isinstance(v, bool):
        return Bool(v)
    if isinstance(v, int):
        return Int(v)
    raise StuckError(f"block local holds a non-scalar value {v!r}")


def _decl_map(decls) -> dict[str, Decl]:
    if isinstance(decls, dict):
        return decls
    if hasattr(decls, "decl_map"):
        return decls.decl_map
    return {d.name: d for d in decls}


def step(config: Configuration, decls) -> Configuration:
    """One transition.  Raises StuckError on a configuration well-formedness excludes."""
    s, sigma = config.stmt, config.state
    if s is None:
        raise StuckError("no transition from the empty statement")
    env = sigma.vals
    match s:
        case Skip():
            return Configuration(None, sigma)
        case Assign(Var(n), e):
            return Configuration(None, sigma.set(n, eval_expr(e, env)))
        case Assign(Index(Var(a), i), e):
            arr = array_set(as_array(env.get(a)), eval_expr(i, env), eval_expr(e, env))
            return Configuration(None, sigma.set(a, arr))
        case ParAssign(ns, vs):
            new = [eval_expr(v, env) for v in vs]
            d = dict(env)
            d.update(zip(ns, new))
            return Configuration(None, State(d))
        case Seq(a, b):
            nxt = step(Configuration(a, sigma), decls)
            rest = b if nxt.stmt is None else Seq(nxt.stmt, b)
            return Configuration(rest, nxt.state)
        case If(c, a, b):
            return Configuration(a if eval_expr(c, env) else b, sigma)
        case While(c, body):
            if eval_expr(c, env):
                return Configuration(Seq(body, s), sigma)
            return Configuration(None, sigma)
        case Block(ns, vs, body):
            saved = tuple(literal(env.get(n, 0)) for n in ns)
            return Configuration(seq([ParAssign(ns, vs), body, ParAssign(ns, saved)]), sigma)
        case Call(name, args):
            d = _decl_map(decls).get(name)
            if d is None:
                raise StuckError(f"call of undeclared procedure {name}")
            if len(d.formals) != len(args):
                raise StuckError(f"arity mismatch in call of {name}")
            return Configuration(Block(d.formals, args, d.body), sigma)
    raise StuckError(f"no transition for {s!r}")


def trace(stmt: Stmt, initial: State, decls=(), fuel: int = DEFAULT_FUEL) -> list[Configuration]:
    """The configuration sequence from ``<stmt, initial>``, at most ``fuel`` steps long."""
    out = [Configuration(stmt, initial)]
    cur = out[0]
    for _ in range(fuel):
        if cur.terminal:
            break
        cur = step(cur, decls)
        out.append(cur)
    return out


# ---------------------------------------------------------------------------
# fast runner
# ---------------------------------------------------------------------------

Compiled = Callable[[dict], object]
_CACHE: dict[int, tuple[Expr, Compiled]] = {}

_BIN = {
    "+": lambda x, y: x + y,
    "-": lambda x, y: x - y,
    "*": lambda x, y: x * y,
    "max": max,
    "min": min,
    "<": lambda x, y: x < y,
    "<=": lambda x, y: x <= y,
}


def compile_expr(e: Expr) -> Compiled:
    """Closure evaluating a program expression; falls back to ``eval_expr``."""
    hit = _CACHE.get(id(e))
    if hit is not None and hit[0] is e:
        return hit[1]
    f = _compile(e)
    _CACHE[id(e)] = (e, f)
    return f


def _compile(e: Expr) -> Compiled:
    match e:
        case Int(v) | Bool(v):
            return lambda env: v
        case Var(n):
            return lambda env: env.get(n, 0)
        case Index(Var(a), i):
            fi = _compile(i)

            def read(env):
                arr = env.get(a)
                return arr.get(fi(env), 0) if isinstance(arr, dict) else 0

            return read
        case Unary("neg", x):
            fx = _compile(x)
            return lambda env: -fx(env)
        case Unary("not", x):
            fx = _compile(x)
            return lambda env: not fx(env)
        case Binary("and", l, r):
            fl, fr = _compile(l), _compile(r)
            return lambda env: bool(fl(env)) and bool(fr(env))
        case Binary("or", l, r):
            fl, fr = _compile(l), _compile(r)
            return lambda env: bool(fl(env)) or bool(fr(env))
        case Binary("->", l, r):
            fl, fr = _compile(l), _compile(r)
            return lambda env: (not fl(env)) or bool(fr(env))
        case Binary(op, l, r) if op in _BIN:
            fl, fr, g = _compile(l), _compile(r), _BIN[op]
            return lambda env: g(fl(env), fr(env))
    return lambda env: eval_expr(e, env)


@dataclass(frozen=True)
class _Restore:
    names: tuple[str, ...]
    values: tuple


def run(stmt: Stmt, initial: State, decls=(), fuel: int = DEFAULT_FUEL) -> Outcome:
    """Execute to termination or until ``fuel`` transitions have been taken."""
    dmap = _decl_map(decls)
    env = dict(initial.vals)
    stack: list = [stmt]
    steps = 0
    try:
        while stack:
            if steps >= fuel:
                return OutOfFuel(Configuration(_residual(stack), State(env)), steps)
            s = stack.pop()
            if type(s) is Seq:
                stack.append(s.second)
                stack.append(s.first)
                continue
            steps += 1
            t = type(s)
            if t is Assign:
                tgt = s.target
                v = compile_expr(s.value)(env)
                if type(tgt) is Var:
                    env[tgt.name] = v
                else:
                    a = tgt.array.name
                    env[a] = array_set(as_array(env.get(a)), compile_expr(tgt.index)(env), v)
            elif t is If:
                stack.append(s.then if compile_expr(s.cond)(env) else s.else_)
            elif t is While:
                if compile_expr(s.cond)(env):
                    stack.append(s)
                    stack.append(s.body)
            elif t is Block or t is Call:
                if t is Call:
                    d = dmap.get(s.name)
                    if d is None:
                        return Stuck(f"call of undeclared procedure {s.name}", steps)
                    if len(d.formals) != len(s.args):
                        return Stuck(f"arity mismatch in call of {s.name}", steps)
                    # the call step yields a block; entering that block is one more step
                    if steps >= fuel:
                        stack.append(Block(d.formals, s.args, d.body))
                        continue
                    steps += 1
                    names, values, body = d.formals, s.args, d.body
                else:
                    names, values, body = s.names, s.values, s.body
                saved = tuple(env.get(n, 0) for n in names)
                stack.append(_Restore(names, saved))
                stack.append(body)
                stack.append(ParAssign(names, values))
            elif t is ParAssign:
                new = [compile_expr(v)(env) for v in s.values]
                env.update(zip(s.names, new))
            elif t is _Restore:
                env.update(zip(s.names, s.values))
            elif t is Skip:
                pass
            else:
                return Stuck(f"no transition for {s!r}", steps)
    except StuckError as exc:
        return Stuck(str(exc), steps)
    return Terminated(State(env), steps)


def _residual(stack: list) -> Stmt:
    items = []
    for s in reversed(stack):
        if isinstance(s, _Restore):
            items.append(ParAssign(s.names, tuple(literal(v) for v in s.values)))
        else:
            items.append(s)
    return seq(items)


def run_program(program, initial: State, fuel: int = DEFAULT_FUEL) -> Outcome:
    if program.main is None:
        raise ValueError("program has no main statement")
    return run(program.main, initial, program, fuel)
