"""Bounded discharge of verification conditions.

A VC ``H -> C`` is checked on every state of a finite domain: integers in a
window, arrays with support inside ``[0, array_max_len)`` and entries in a
value range, both booleans.  The answer is either a counterexample (a genuine
one, re-checked by the reference evaluator), validity relative to the
domain, or Unknown when the budget runs out.

Before enumerating, the VC is simplified without changing its truth on the
domain: existentials in H and universals in C become free variables, an
existential in C is instantiated with the witness hint if there is one,
equations ``v = e`` in H are solved for ``v``, and variables that occur in H
alone are pushed into a bounded existential over the window.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import syntax as S
from .assertions import EvalWindow, eval_expr, free_vars, fresh_name, has_unbounded, substitute
from .lang import ARRAY, BOOL, infer_types
from .proof import VC
from .syntax import ArrayExists, Binary, Expr, Int, Perm, Quant, Var
from .vector import Batch, Fallback, holds


@dataclass(frozen=True)
class DomainConfig:
    int_lo: int = -2
    int_hi: int = 5
    array_max_len: int = 4
    value_lo: int = 0
    value_hi: int = 3
    batch: int = 1 << 18
    time_budget: float = 600.0  # seconds per VC

    def ints(self) -> list[int]:
        return list(range(self.int_lo, self.int_hi + 1))

    def window(self) -> EvalWindow:
        return EvalWindow(self.int_lo, self.int_hi, self.array_max_len, self.value_lo, self.value_hi,
                          include_mentioned=True)

    def arrays(self) -> list[dict[int, int]]:
        """Distinct arrays of the domain, shorter ones first."""
        seen, out = set(), []
        for arr in self.window().arrays():
            key = tuple(sorted(arr.items()))
            if key not in seen:
                seen.add(key)
                out.append(arr)
        return out

    def span(self) -> tuple[int, int]:
        lo = min(self.int_lo, 0) - 2
        hi = max(self.int_hi, self.array_max_len - 1) + 2
        return lo, hi - lo + 1

    def describe(self) -> str:
        return (f"ints [{self.int_lo},{self.int_hi}], arrays len <= {self.array_max_len}, "
                f"values [{self.value_lo},{self.value_hi}]")


@dataclass(frozen=True)
class Valid:
    window_relative: bool = True
    states: int = 0
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Counterexample:
    state: dict
    failed: str = ""


@dataclass(frozen=True)
class Unknown:
    reason: str


Verdict = Valid | Counterexample | Unknown


# ---------------------------------------------------------------------------
# preprocessing
# ---------------------------------------------------------------------------


@dataclass
class Prepared:
    hyps: list[Expr]
    concls: list[Expr]
    defs: list[tuple[str, Expr]] = field(default_factory=list)
    projected: list[tuple[str, Expr]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def prepare(vc: VC, cfg: DomainConfig, types: dict[str, str] | None = None) -> Prepared:
    avoid = set(free_vars(vc.hyp) | free_vars(vc.concl))
    witness = dict(vc.witness)

    def fresh(v: str) -> str:
        n = fresh_name(v, avoid)
        avoid.add(n)
        return n

    hyps: list[Expr] = []
    work = S.conjuncts(vc.hyp)
    while work:
        h = work.pop(0)
        if isinstance(h, Quant) and h.kind == "exists" and h.lo is None or isinstance(h, ArrayExists):
            n = fresh(h.var)
            work[:0] = S.conjuncts(substitute(h.body, {Var(h.var): Var(n)}))
        elif h not in hyps:
            hyps.append(h)

    notes: list[str] = []
    concls: list[Expr] = []
    work = S.conjuncts(vc.concl)
    while work:
        c = work.pop(0)
        if isinstance(c, Quant) and c.kind == "forall" and c.lo is None:
            n = fresh(c.var)
            work[:0] = S.conjuncts(substitute(c.body, {Var(c.var): Var(n)}))
        elif isinstance(c, (Quant, ArrayExists)) and c.var in witness and \
                (isinstance(c, ArrayExists) or c.kind == "exists"):
            w = witness[c.var]
            notes.append(f"witness {c.var} := {S.show(w)}")
            body = substitute(c.body, {Var(c.var): w})
            if isinstance(c, Quant) and c.lo is not None:
                body = S.conj([S.le(c.lo, w), S.le(w, c.hi), body])
            work[:0] = S.conjuncts(body)
        elif c not in concls:
            concls.append(c)
    concls = [c for c in concls if c not in hyps]

    defs: list[tuple[str, Expr]] = []
    progress = True
    while progress:
        progress = False
        for k, h in enumerate(hyps):
            if not (isinstance(h, Binary) and h.op == "="):
                continue
            for lhs, rhs in ((h.left, h.right), (h.right, h.left)):
                if isinstance(lhs, Var) and lhs.name not in free_vars(rhs):
                    m = {lhs: rhs}
                    hyps = _dedup([substitute(x, m) for j, x in enumerate(hyps) if j != k])
                    concls = _dedup([substitute(x, m) for x in concls])
                    defs.append((lhs.name, rhs))
                    progress = True
                    break
            if progress:
                break
        if progress:
            hyps = [x for x in hyps if not _trivial(x)]
            concls = [x for x in concls if not _trivial(x) and x not in hyps]
    if defs:
        notes.append("solved " + ", ".join(f"{v} = {S.show(e)}" for v, e in defs))

    tys = _types(hyps + concls, types)
    cvars = set().union(*(free_vars(c) for c in concls)) if concls else set()
    projected: list[tuple[str, Expr]] = []
    for v in sorted(set().union(*(free_vars(h) for h in hyps)) - cvars if hyps else ()):
        if tys.get(v, "int") != "int":
            continue
        group = [h for h in hyps if v in free_vars(h)]
        # only cheap groups: quantifying over a loop-like formula multiplies its cost
        if not group or any(_costly(h) for h in group):
            continue
        body = S.conj(group)
        hyps = [h for h in hyps if v not in free_vars(h)]
        hyps.append(Quant("exists", v, body, Int(cfg.int_lo), Int(cfg.int_hi)))
        projected.append((v, body))
    return Prepared(hyps, concls, defs, projected, notes)


def _costly(e: Expr) -> bool:
    match e:
        case Quant() | ArrayExists() | S.Sorted() | Perm():
            return True
        case S.Unary(_, a):
            return _costly(a)
        case Binary(_, l, r):
            return _costly(l) or _costly(r)
        case S.Cond(c, t, f):
            return _costly(c) or _costly(t) or _costly(f)
    return False


def _dedup(xs: list[Expr]) -> list[Expr]:
    out: list[Expr] = []
    for x in xs:
        if x not in out:
            out.append(x)
    return out


def _trivial(e: Expr) -> bool:
    return e == S.TRUE or (isinstance(e, Binary) and e.op in ("=", "<=") and e.left == e.right)


def _types(exprs: list[Expr], given: dict[str, str] | None) -> dict[str, str]:
    tys = dict(infer_types(None, exprs).types)
    if given:
        for k, v in given.items():
            if k in tys:
                tys[k] = v
    return tys


# ---------------------------------------------------------------------------
# enumeration
# ---------------------------------------------------------------------------


class _Budget(Exception):
    pass


@dataclass
class _Domain:
    cfg: DomainConfig
    scalars: list[str]
    doms: dict[str, list]
    arrays: list[str]
    table: list[dict[int, int]]
    mat: np.ndarray  # (len(table), width)
    off: int
    width: int


def _evaluate(e: Expr, b: Batch, rows_env) -> np.ndarray:
    try:
        return holds(e, b)
    except Fallback:
        win = rows_env.window
        return np.array([bool(eval_expr(e, rows_env.row(i), win)) for i in range(b.n)], dtype=bool)


class _Rows:
    """Scalar view of a batch for the fallback evaluator."""

    def __init__(self, b: Batch, dom: _Domain):
        self.b, self.dom = b, dom
        self.window = dom.cfg.window()

    def row(self, i: int) -> dict:
        out: dict[str, object] = {}
        for n, col in self.b.env.items():
            if np.ndim(col) == 2:
                r = col[i]
                out[n] = {k + self.b.off: int(x) for k, x in enumerate(r) if x != 0}
            elif np.ndim(col) == 1:
                x = col[i]
                out[n] = bool(x) if col.dtype == bool else int(x)
        return out


def _compress(b: Batch, keep: np.ndarray) -> Batch:
    env = {k: (v[keep] if np.ndim(v) >= 1 else v) for k, v in b.env.items()}
    return Batch(int(keep.sum()), b.off, b.width, env, b.ints, b.spill[keep])


def _scalar_chunks(dom: _Domain, hyps: list[Expr], deadline: float):
    """Filtered scalar rows in lexicographic order, a chunk at a time."""
    names = dom.scalars
    if not names:
        yield {}, 1
        return
    sizes = [len(dom.doms[n]) for n in names]
    split = len(names)
    prod = 1
    while split > 0 and prod * sizes[split - 1] <= dom.cfg.batch:
        split -= 1
        prod *= sizes[split]
    lead, trail = names[:split], names[split:]
    if trail:
        grids = np.meshgrid(*(np.array(dom.doms[n]) for n in trail), indexing="ij")
        trail_cols = {n: g.ravel() for n, g in zip(trail, grids)}
    else:
        trail_cols = {}
    for vals in itertools.product(*(dom.doms[n] for n in lead)):
        if time.monotonic() > deadline:
            raise _Budget()
        env = dict(trail_cols)
        env.update({n: np.full(prod, v) for n, v in zip(lead, vals)})
        b = Batch(prod, dom.off, dom.width, env, dom.cfg.ints())
        for h in hyps:
            keep = _evaluate(h, b, _Rows(b, dom))
            if not keep.all():
                b = _compress(b, keep)
            if b.n == 0:
                break
        if b.n:
            yield b.env, b.n


def _perm_link(hyps: list[Expr], dom: _Domain):
    for h in hyps:
        if isinstance(h, Perm) and isinstance(h.left, Var) and isinstance(h.right, Var):
            x, y = h.left.name, h.right.name
            if x != y and x in dom.arrays and y in dom.arrays and \
                    not (free_vars(h.lo) | free_vars(h.hi)) & set(dom.arrays):
                return h
    return None


def _perm_pairs(dom: _Domain, lo: int, hi: int, cache: dict) -> np.ndarray:
    """Index pairs (ix, iy) of domain arrays that are permutations of each other on [lo:hi]."""
    cap = dom.cfg.array_max_len
    key = (max(lo, 0), min(hi, cap - 1))
    if key[0] > key[1]:
        key = (0, -1)
    if key in cache:
        return cache[key]
    l, h = key
    buckets: dict[tuple, list[int]] = {}
    for i, arr in enumerate(dom.table):
        outside = tuple(arr.get(k, 0) for k in range(cap) if not l <= k <= h)
        inside = tuple(sorted(arr.get(k, 0) for k in range(l, h + 1)))
        buckets.setdefault((outside, inside), []).append(i)
    pairs = [(ix, iy) for iy in range(len(dom.table)) for ix in buckets[_bucket_key(dom.table[iy], l, h, cap)]]
    pairs.sort(key=lambda p: (p[1], p[0]))
    out = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    cache[key] = out
    return out


def _bucket_key(arr, l, h, cap):
    return (tuple(arr.get(k, 0) for k in range(cap) if not l <= k <= h),
            tuple(sorted(arr.get(k, 0) for k in range(l, h + 1))))


@dataclass
class _Outcome:
    states: int
    cex: dict | None = None
    failed: Expr | None = None


def _search(hyps: list[Expr], concls: list[Expr], tys: dict[str, str], cfg: DomainConfig,
            deadline: float) -> _Outcome:
    names = sorted(set().union(*(free_vars(e) for e in hyps + concls)) if hyps + concls else set())
    arrays = [n for n in names if tys.get(n) == ARRAY]
    scal = [n for n in names if tys.get(n) != ARRAY]
    sh = [h for h in hyps if free_vars(h) <= set(scal)]
    rh = [h for h in hyps if h not in sh]
    weight = {n: sum(n in free_vars(h) for h in sh) for n in scal}
    scal.sort(key=lambda n: (-weight[n], n))
    doms = {n: ([False, True] if tys.get(n) == BOOL else cfg.ints()) for n in scal}
    off, width = cfg.span()
    table = cfg.arrays() if arrays else []
    mat = np.zeros((len(table), width), dtype=np.int16)
    for i, arr in enumerate(table):
        for k, v in arr.items():
            mat[i, k - off] = v
    dom = _Domain(cfg, scal, doms, arrays, table, mat, off, width)
    # cheap hypotheses first
    rh.sort(key=lambda e: len(S.show(e)))
    link = _perm_link(rh, dom)
    others = [a for a in arrays if link is None or a not in (link.left.name, link.right.name)]
    n_other = len(table) ** len(others)
    # the pair generator produces exactly the pairs satisfying the linking conjunct
    rh_rest = [h for h in rh if h is not link]
    cache: dict = {}
    states = 0
    for env_s, ns in _scalar_chunks(dom, sh, deadline):
        if not arrays:
            b = Batch(ns, off, width, dict(env_s), cfg.ints())
            states += ns
            out = _check_batch(b, rh, concls, dom)
            if out is not None:
                return _Outcome(states, *out)
            continue
        if link is not None:
            sb = Batch(ns, off, width, dict(env_s), cfg.ints())
            lo = np.broadcast_to(np.asarray(_ev(link.lo, sb)), (ns,))
            hi = np.broadcast_to(np.asarray(_ev(link.hi, sb)), (ns,))
            cap = cfg.array_max_len
            klo, khi = np.maximum(lo, 0), np.minimum(hi, cap - 1)
            keys = sorted(set(zip(klo.tolist(), khi.tolist())))
            groups = [(np.nonzero((klo == a) & (khi == z))[0], _perm_pairs(dom, a, z, cache)) for a, z in keys]
        else:
            groups = [(np.arange(ns), None)]
        for rows, pairs in groups:
            n_pairs = 1 if pairs is None else len(pairs)
            n_combo = n_pairs * n_other
            step = max(1, cfg.batch // max(n_combo, 1))
            for start in range(0, len(rows), step):
                if time.monotonic() > deadline:
                    raise _Budget()
                sub = rows[start:start + step]
                for cstart in range(0, n_combo, cfg.batch):
                    cidx = np.arange(cstart, min(n_combo, cstart + cfg.batch))
                    n = len(sub) * len(cidx)
                    env = {k: np.repeat(v[sub], len(cidx)) for k, v in env_s.items()}
                    ci = np.tile(cidx, len(sub))
                    if pairs is not None:
                        p = pairs[ci // n_other]
                        env[link.left.name] = mat[p[:, 0]]
                        env[link.right.name] = mat[p[:, 1]]
                        rest = ci % n_other
                    else:
                        rest = ci
                    for a in reversed(others):
                        env[a] = mat[rest % len(table)]
                        rest = rest // len(table)
                    b = Batch(n, off, width, env, cfg.ints())
                    states += n
                    out = _check_batch(b, rh_rest, concls, dom)
                    if out is not None:
                        return _Outcome(states, *out)
    return _Outcome(states)


def _ev(e: Expr, b: Batch):
    from .vector import veval

    return veval(e, b)


def _check_batch(b: Batch, hyps: list[Expr], concls: list[Expr], dom: _Domain):
    for h in hyps:
        keep = _evaluate(h, b, _Rows(b, dom))
        if not keep.all():
            b = _compress(b, keep)
        if b.n == 0:
            return None
    bad = np.zeros(b.n, dtype=bool)
    which = np.full(b.n, -1)
    for k, c in enumerate(concls):
        ok = _evaluate(c, b, _Rows(b, dom))
        newly = ~ok & ~bad
        which[newly] = k
        bad |= ~ok
    rows = _Rows(b, dom)
    spilled = np.nonzero(b.spill)[0]
    if len(spilled):
        win = dom.cfg.window()
        for i in spilled:
            env = rows.row(int(i))
            if not all(eval_expr(h, env, win) for h in hyps):
                bad[i] = False
                continue
            fails = [k for k, c in enumerate(concls) if not eval_expr(c, env, win)]
            bad[i] = bool(fails)
            if fails:
                which[i] = fails[0]
    idx = np.nonzero(bad)[0]
    if len(idx) == 0:
        return None
    i = int(idx[0])
    return rows.row(i), concls[int(which[i])]


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def discharge_bounded(vc: VC, cfg: DomainConfig | None = None, types: dict[str, str] | None = None) -> Verdict:
    """Decide ``vc`` on the finite domain described by ``cfg``."""
    cfg = cfg or DomainConfig()
    deadline = time.monotonic() + cfg.time_budget
    prep = prepare(vc, cfg, types)
    if not prep.concls:
        return Valid(True, 0, tuple(prep.notes))
    tys = _types(prep.hyps + prep.concls, types)
    try:
        remaining = []
        states = 0
        # a conclusion about simple variables only is first tried against the
        # simple-variable hypotheses alone, which is much cheaper
        scalar_hyps = [h for h in prep.hyps if all(tys.get(v) != ARRAY for v in free_vars(h))]
        for c in prep.concls:
            if all(tys.get(v) != ARRAY for v in free_vars(c)):
                out = _search(scalar_hyps, [c], tys, cfg, deadline)
                states += out.states
                if out.cex is None:
                    continue
            remaining.append(c)
        if remaining:
            out = _search(prep.hyps, remaining, tys, cfg, deadline)
            states += out.states
            if out.cex is not None:
                return _confirm(vc, prep, out, cfg)
    except _Budget:
        return Unknown(f"time budget of {cfg.time_budget:g}s exhausted")
    return Valid(True, states, tuple(prep.notes))


def _confirm(vc: VC, prep: Prepared, out: _Outcome, cfg: DomainConfig) -> Verdict:
    state = dict(out.cex)
    win = cfg.window()
    for v, body in reversed(prep.projected):
        for x in cfg.ints():
            if eval_expr(body, {**state, v: x}, win):
                state[v] = x
                break
    for v, e in reversed(prep.defs):
        state[v] = eval_expr(e, state, win)
    if not eval_expr(vc.hyp, state, win):
        return Unknown("candidate counterexample does not satisfy the hypothesis")
    if eval_expr(vc.concl, state, win):
        return Unknown("witness hint fails in state " + _show(state))
    if has_unbounded(vc.hyp) or has_unbounded(vc.concl):
        return Unknown("falsified only relative to the window in state " + _show(state))
    return Counterexample(state, S.show(out.failed) if out.failed is not None else "")


def _show(state: dict) -> str:
    from .semantics import show_state

    return show_state(state)
