"""Substitution, free variables and evaluation of expressions and assertions.

Array values are plain dicts from index to integer holding only non-zero
entries; every other index reads as 0, so dict equality is array equality.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

from . import syntax as S
from .lang import expr_vars
from .syntax import (
    ArrayExists, Binary, Bool, Cond, Expr, Index, Int, Perm, Quant, Sorted, Store, Unary, Var,
)


class SubstError(Exception):
    pass


class WindowRequired(Exception):
    pass


def free_vars(p: Expr) -> frozenset[str]:
    return expr_vars(p)


# ---------------------------------------------------------------------------
# substitution
# ---------------------------------------------------------------------------


def fresh_name(base: str, avoid: set[str] | frozenset[str]) -> str:
    base = base.rstrip("'")
    k = 1
    while f"{base}_{k}" in avoid:
        k += 1
    return f"{base}_{k}"


def _normalize_map(m: Mapping[Expr, Expr]) -> dict[str, Expr]:
    """Turn targets into a name-indexed map; ``a[s] := t`` becomes ``a := store(a, s, t)``."""
    out: dict[str, Expr] = {}
    for target, value in m.items():
        if isinstance(target, str):
            target = Var(target)
        if isinstance(target, Var):
            if target.name in out:
                raise SubstError(f"target {target.name} occurs twice")
            out[target.name] = value
        elif isinstance(target, Index) and isinstance(target.array, Var):
            name = target.array.name
            if name in out:
                raise SubstError(f"array {name} is substituted twice")
            out[name] = Store(Var(name), target.index, value)
        else:
            raise SubstError(f"cannot substitute for {S.show(target)}")
    return out


def substitute(p: Expr, m: Mapping[Expr, Expr] | Mapping[str, Expr]) -> Expr:
    """Simultaneous capture-avoiding substitution ``p[targets := values]``.

    Targets are simple variables, whole arrays, or one subscripted component
    ``a[s]``; reads ``a[e]`` of an updated array become ``(e = s ? t : a[e])``.
    """
    return _subst(p, _normalize_map(m))


def index_store(arr: Expr, idx: Expr) -> Expr:
    """Read position ``idx`` of an array term, resolving stores into conditionals."""
    if isinstance(arr, Store):
        if arr.index == idx:
            return arr.value
        if isinstance(arr.index, Int) and isinstance(idx, Int):
            return index_store(arr.array, idx)
        return Cond(S.eq(idx, arr.index), arr.value, index_store(arr.array, idx))
    return Index(arr, idx)


def _subst(p: Expr, m: dict[str, Expr]) -> Expr:
    if not m:
        return p
    match p:
        case Int() | Bool():
            return p
        case Var(n):
            return m.get(n, p)
        case Index(a, i):
            return index_store(_subst(a, m), _subst(i, m))
        case Store(a, i, v):
            return Store(_subst(a, m), _subst(i, m), _subst(v, m))
        case Unary(op, a):
            return Unary(op, _subst(a, m))
        case Binary(op, l, r):
            return Binary(op, _subst(l, m), _subst(r, m))
        case Cond(c, t, f):
            return Cond(_subst(c, m), _subst(t, m), _subst(f, m))
        case Sorted(a, lo, hi):
            return Sorted(_subst(a, m), _subst(lo, m), _subst(hi, m))
        case Perm(a, b, lo, hi):
            return Perm(_subst(a, m), _subst(b, m), _subst(lo, m), _subst(hi, m))
        case Quant(kind, v, body, lo, hi):
            lo2 = _subst(lo, m) if lo is not None else None
            hi2 = _subst(hi, m) if hi is not None else None
            v2, body2 = _bind(v, body, m)
            return Quant(kind, v2, body2, lo2, hi2)
        case ArrayExists(v, body):
            v2, body2 = _bind(v, body, m)
            return ArrayExists(v2, body2)
    raise TypeError(f"not an expression: {p!r}")


def _bind(v: str, body: Expr, m: dict[str, Expr]) -> tuple[str, Expr]:
    fv = free_vars(body)
    inner = {n: t for n, t in m.items() if n != v and n in fv}
    if not inner:
        return v, body
    captured = set().union(*(free_vars(t) for t in inner.values()))
    if v in captured:
        new = fresh_name(v, captured | fv | set(inner))
        inner = {**inner, v: Var(new)}
        v = new
    return v, _subst(body, inner)


def rename_bound(p: Expr, avoid: set[str]) -> Expr:
    """Alpha-rename every bound variable that is in ``avoid``."""
    match p:
        case Quant(kind, v, body, lo, hi):
            body = rename_bound(body, avoid)
            if v in avoid:
                new = fresh_name(v, avoid | free_vars(body))
                body = _subst(body, {v: Var(new)})
                v = new
            return Quant(kind, v, body, lo, hi)
        case ArrayExists(v, body):
            body = rename_bound(body, avoid)
            if v in avoid:
                new = fresh_name(v, avoid | free_vars(body))
                body = _subst(body, {v: Var(new)})
                v = new
            return ArrayExists(v, body)
        case Unary(op, a):
            return Unary(op, rename_bound(a, avoid))
        case Binary(op, l, r):
            return Binary(op, rename_bound(l, avoid), rename_bound(r, avoid))
    return p


def has_unbounded(p: Expr) -> bool:
    """True when evaluation of ``p`` depends on the window."""
    match p:
        case Quant(_, _, body, lo, _):
            return lo is None or has_unbounded(body)
        case ArrayExists():
            return True
        case Unary(_, a):
            return has_unbounded(a)
        case Binary(_, l, r):
            return has_unbounded(l) or has_unbounded(r)
        case Cond(c, t, f):
            return has_unbounded(c) or has_unbounded(t) or has_unbounded(f)
    return False


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalWindow:
    """Finite ranges standing in for the integers where a formula needs them."""

    lo: int = -8
    hi: int = 8
    array_len: int = 3
    value_lo: int = 0
    value_hi: int = 2
    include_mentioned: bool = True

    def ints(self, env: Mapping[str, object]) -> list[int]:
        vals = set(range(self.lo, self.hi + 1))
        if self.include_mentioned:
            for v in env.values():
                if isinstance(v, dict):
                    vals.update(v.keys())
                    vals.update(v.values())
                elif isinstance(v, int) and not isinstance(v, bool):
                    vals.add(v)
        return sorted(vals)

    def arrays(self):
        vals = range(self.value_lo, self.value_hi + 1)
        for n in range(self.array_len + 1):
            for combo in itertools.product(vals, repeat=n):
                yield {i: x for i, x in enumerate(combo) if x != 0}


def as_array(v) -> dict[int, int]:
    return v if isinstance(v, dict) else {}


def array_set(arr: dict[int, int], i: int, v: int) -> dict[int, int]:
    out = dict(arr)
    if v == 0:
        out.pop(i, None)
    else:
        out[i] = v
    return out


def eval_expr(t: Expr, env: Mapping[str, object], window: EvalWindow | None = None):
    """Evaluate in a valuation mapping names to ints, bools or array dicts;
    unmapped names read as 0 (or the all-zero array where one is expected)."""
    match t:
        case Int(v) | Bool(v):
            return v
        case Var(n):
            return env.get(n, 0)
        case Index(a, i):
            return as_array(eval_expr(a, env, window)).get(eval_expr(i, env, window), 0)
        case Store(a, i, v):
            return array_set(as_array(eval_expr(a, env, window)),
                             eval_expr(i, env, window), eval_expr(v, env, window))
        case Unary("neg", a):
            return -eval_expr(a, env, window)
        case Unary("not", a):
            return not eval_expr(a, env, window)
        case Binary(op, l, r):
            if op == "and":
                return bool(eval_expr(l, env, window)) and bool(eval_expr(r, env, window))
            if op == "or":
                return bool(eval_expr(l, env, window)) or bool(eval_expr(r, env, window))
            if op == "->":
                return (not eval_expr(l, env, window)) or bool(eval_expr(r, env, window))
            x = eval_expr(l, env, window)
            y = eval_expr(r, env, window)
            match op:
                case "+":
                    return x + y
                case "-":
                    return x - y
                case "*":
                    return x * y
                case "max":
                    return max(x, y)
                case "min":
                    return min(x, y)
                case "<":
                    return x < y
                case "<=":
                    return x <= y
                case "=":
                    if isinstance(x, dict) or isinstance(y, dict):
                        return as_array(x) == as_array(y)
                    return x == y
        case Cond(c, a, b):
            return eval_expr(a, env, window) if eval_expr(c, env, window) else eval_expr(b, env, window)
        case Sorted(a, lo, hi):
            arr = as_array(eval_expr(a, env, window))
            x, y = eval_expr(lo, env, window), eval_expr(hi, env, window)
            return is_sorted(arr, x, y)
        case Perm(a, b, lo, hi):
            return is_perm(as_array(eval_expr(a, env, window)), as_array(eval_expr(b, env, window)),
                           eval_expr(lo, env, window), eval_expr(hi, env, window))
        case Quant(kind, v, body, lo, hi):
            if lo is not None:
                dom = range(eval_expr(lo, env, window), eval_expr(hi, env, window) + 1)
            else:
                if window is None:
                    raise WindowRequired(f"unbounded quantifier over {v}")
                dom = window.ints(env)
            inner = dict(env)
            test = all if kind == "forall" else any

            def holds(x):
                inner[v] = x
                return bool(eval_expr(body, inner, window))

            return test(holds(x) for x in dom)
        case ArrayExists(v, body):
            if window is None:
                raise WindowRequired(f"array existential over {v}")
            inner = dict(env)
            candidates = itertools.chain(
                (x for x in env.values() if isinstance(x, dict)), window.arrays())
            for arr in candidates:
                inner[v] = arr
                if eval_expr(body, inner, window):
                    return True
            return False
    raise TypeError(f"cannot evaluate {t!r}")


def is_sorted(arr: Mapping[int, int], x: int, y: int) -> bool:
    return all(arr.get(i, 0) <= arr.get(i + 1, 0) for i in range(x, y))


def is_perm(a: Mapping[int, int], b: Mapping[int, int], x: int, y: int) -> bool:
    """a[x:y] is a rearrangement of b[x:y] and a, b agree outside [x:y]."""
    for k in set(a) | set(b):
        if not (x <= k <= y) and a.get(k, 0) != b.get(k, 0):
            return False
    left = sorted(a.get(i, 0) for i in range(x, y + 1))
    right = sorted(b.get(i, 0) for i in range(x, y + 1))
    return left == right


def eval_assertion(p: Expr, env, window: EvalWindow | None = None) -> bool:
    """Truth of ``p`` in a state; unbounded quantifiers range over ``window``
    (see :func:`has_unbounded` for whether the answer is window-relative)."""
    if hasattr(env, "env"):
        env = env.env()
    return bool(eval_expr(p, env, window))
