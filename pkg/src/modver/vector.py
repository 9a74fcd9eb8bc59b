"""Batch evaluation of assertions over many states at once with numpy.

A batch holds N states.  Simple variables are length-N vectors; an array
variable is an (N, W) matrix covering the index span [off, off + W).
Arrays are zero outside their finite support, so reads outside the span are
exact as long as no store wrote there; rows where a store index left the
span are flagged in ``spill`` and must be re-evaluated by the scalar
evaluator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .syntax import (
    ArrayExists, Binary, Bool, Cond, Expr, Index, Int, Perm, Quant, Sorted, Store, Unary, Var,
)


class Fallback(Exception):
    """The construct has no vector encoding; use the scalar evaluator."""


MAX_RANGE = 512


@dataclass
class Batch:
    n: int
    off: int
    width: int
    env: dict[str, np.ndarray]
    ints: list[int] = field(default_factory=list)  # domain of unbounded integer quantifiers
    spill: np.ndarray | None = None

    def __post_init__(self):
        if self.spill is None:
            self.spill = np.zeros(self.n, dtype=bool)


def _vec(x, n: int) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim == 0:
        return np.broadcast_to(a, (n,))
    return a


def _read(m: np.ndarray, idx, b: Batch) -> np.ndarray:
    idx = _vec(idx, b.n)
    j = idx - b.off
    inside = (j >= 0) & (j < b.width)
    jc = np.clip(j, 0, b.width - 1)
    vals = m[np.arange(b.n), jc]
    return np.where(inside, vals, 0)


def _read_const(m: np.ndarray, k: int, b: Batch):
    j = k - b.off
    if 0 <= j < b.width:
        return m[:, j]
    return np.zeros(b.n, dtype=m.dtype)


def _range(lo, hi) -> range:
    lo_a, hi_a = np.asarray(lo), np.asarray(hi)
    if lo_a.size == 0:
        return range(0)
    a, z = int(lo_a.min()), int(hi_a.max())
    if z - a > MAX_RANGE:
        raise Fallback("quantifier range too wide")
    return range(a, z + 1)


def veval(e: Expr, b: Batch):
    match e:
        case Int(v):
            return np.int64(v)
        case Bool(v):
            return np.bool_(v)
        case Var(n):
            if n in b.env:
                return b.env[n]
            raise Fallback(f"unbound variable {n}")
        case Index(a, i):
            return _read(_array(a, b), veval(i, b), b)
        case Store():
            return _array(e, b)
        case Unary("neg", a):
            return -veval(a, b)
        case Unary("not", a):
            return ~np.asarray(veval(a, b), dtype=bool)
        case Binary(op, l, r):
            if op in ("and", "or", "->"):
                x = np.asarray(veval(l, b), dtype=bool)
                y = np.asarray(veval(r, b), dtype=bool)
                if op == "and":
                    return x & y
                if op == "or":
                    return x | y
                return ~x | y
            if op == "=" and (_is_array(l, b) or _is_array(r, b)):
                return np.all(_array(l, b) == _array(r, b), axis=1)
            x, y = veval(l, b), veval(r, b)
            match op:
                case "+":
                    return x + y
                case "-":
                    return x - y
                case "*":
                    return x * y
                case "max":
                    return np.maximum(x, y)
                case "min":
                    return np.minimum(x, y)
                case "<":
                    return x < y
                case "<=":
                    return x <= y
                case "=":
                    return x == y
        case Cond(c, t, f):
            if _is_array(t, b) or _is_array(f, b):
                raise Fallback("array-valued conditional")
            return np.where(np.asarray(veval(c, b), dtype=bool), veval(t, b), veval(f, b))
        case Quant(kind, v, body, lo, hi):
            forall = kind == "forall"
            acc = np.full(b.n, forall)
            saved = b.env.get(v)
            try:
                if lo is None:
                    dom = b.ints
                    lo_v = hi_v = None
                else:
                    lo_v, hi_v = veval(lo, b), veval(hi, b)
                    dom = _range(lo_v, hi_v)
                for k in dom:
                    b.env[v] = np.int64(k)
                    val = np.asarray(veval(body, b), dtype=bool)
                    if lo_v is not None:
                        inside = (lo_v <= k) & (k <= hi_v)
                        val = (~inside | val) if forall else (inside & val)
                    acc = (acc & val) if forall else (acc | val)
            finally:
                if saved is None:
                    b.env.pop(v, None)
                else:
                    b.env[v] = saved
            return acc
        case Sorted(a, lo, hi):
            m = _array(a, b)
            lo_v, hi_v = veval(lo, b), veval(hi, b)
            acc = np.ones(b.n, dtype=bool)
            for k in _range(lo_v, hi_v):
                ok = _read_const(m, k, b) <= _read_const(m, k + 1, b)
                acc &= (k < lo_v) | (k >= hi_v) | ok
            return acc
        case Perm(x, y, lo, hi):
            mx, my = _array(x, b), _array(y, b)
            lo_v, hi_v = _vec(veval(lo, b), b.n), _vec(veval(hi, b), b.n)
            cols = np.arange(b.off, b.off + b.width)
            inside = (cols[None, :] >= lo_v[:, None]) & (cols[None, :] <= hi_v[:, None])
            acc = np.all(inside | (mx == my), axis=1)
            acc &= _same_multiset(mx, my, inside)
            return acc
        case ArrayExists():
            raise Fallback("array quantifier")
    raise Fallback(f"no vector form for {e!r}")


def _same_multiset(mx: np.ndarray, my: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """Row-wise multiset equality of the entries selected by ``inside``."""
    lo = int(min(mx.min(), my.min()))
    span = int(max(mx.max(), my.max())) - lo + 1
    base = mx.shape[1] + 1
    if base ** span < 2**62:
        # count vectors written as base-(width+1) numerals: exact, no sorting
        weights = base ** np.arange(span, dtype=np.int64)
        ex = np.where(inside, weights[mx - lo], 0).sum(axis=1)
        ey = np.where(inside, weights[my - lo], 0).sum(axis=1)
        return ex == ey
    sentinel = np.iinfo(np.int64).max
    sx = np.sort(np.where(inside, mx, sentinel), axis=1)
    sy = np.sort(np.where(inside, my, sentinel), axis=1)
    return np.all(sx == sy, axis=1)


def _is_array(e: Expr, b: Batch) -> bool:
    if isinstance(e, Store):
        return True
    if isinstance(e, Var):
        v = b.env.get(e.name)
        return v is not None and np.ndim(v) == 2
    return False


def _array(e: Expr, b: Batch) -> np.ndarray:
    match e:
        case Var(n):
            m = b.env.get(n)
            if m is None or np.ndim(m) != 2:
                raise Fallback(f"{n} is not an array in this batch")
            return m
        case Store(a, i, v):
            m = _array(a, b).copy()
            idx = _vec(veval(i, b), b.n)
            val = _vec(veval(v, b), b.n)
            j = idx - b.off
            inside = (j >= 0) & (j < b.width)
            b.spill |= ~inside | (np.abs(val) > np.iinfo(m.dtype).max)
            rows = np.nonzero(inside)[0]
            m[rows, j[rows]] = val[rows]
            return m
    raise Fallback(f"no vector form for array term {e!r}")


def holds(e: Expr, b: Batch) -> np.ndarray:
    return _vec(np.asarray(veval(e, b), dtype=bool), b.n)
