"""SMT-LIB 2 export of verification conditions.

Each VC becomes one script asserting ``hyp`` and ``not concl`` followed by
``(check-sat)``; the VC is valid iff the script is unsat.  ``sorted`` is
replaced by its quantified definition.  ``perm`` becomes equality outside the
interval plus equal value counts inside it, where counting is unrolled over a
declared index range (the span of the discharge domain); each script assumes
the perm intervals it mentions lie inside that range, which makes the
counting exact.
"""

from __future__ import annotations

import re
from pathlib import Path

from . import syntax as S
from .assertions import free_vars, fresh_name, substitute
from .discharge import DomainConfig
from .lang import ARRAY, BOOL, infer_types
from .proof import VC
from .syntax import ArrayExists, Binary, Bool, Cond, Expr, Index, Int, Perm, Quant, Sorted, Store, Unary, Var


class EmitError(Exception):
    pass


def index_range(cfg: DomainConfig | None = None) -> tuple[int, int]:
    off, width = (cfg or DomainConfig()).span()
    return off, off + width - 1


# ---------------------------------------------------------------------------
# expansion of the built-in predicates
# ---------------------------------------------------------------------------


def expand(e: Expr, idx: tuple[int, int], avoid: set[str] | None = None) -> Expr:
    """Replace ``sorted`` and ``perm`` by formulas in the core language."""
    avoid = set(avoid or ()) | set(free_vars(e))

    def fresh(base: str) -> str:
        n = fresh_name(base, avoid)
        avoid.add(n)
        return n

    def go(e: Expr) -> Expr:
        match e:
            case Sorted(a, lo, hi):
                a, lo, hi = go(a), go(lo), go(hi)
                i, j = fresh("i"), fresh("j")
                body = S.le(Index(a, Var(i)), Index(a, Var(j)))
                return Quant("forall", i, Quant("forall", j, body, Var(i), hi), lo, hi)
            case Perm(a, b, lo, hi):
                a, b, lo, hi = go(a), go(b), go(lo), go(hi)
                k = fresh("k")
                outside = S.disj(S.lt(Var(k), lo), S.lt(hi, Var(k)))
                frame = Quant("forall", k, S.implies(outside, S.eq(Index(a, Var(k)), Index(b, Var(k)))))

                def count(arr: Expr, val: Expr) -> Expr:
                    total: Expr = Int(0)
                    for j in range(idx[0], idx[1] + 1):
                        cond = S.conj([S.le(lo, Int(j)), S.le(Int(j), hi), S.eq(Index(arr, Int(j)), val)])
                        total = Binary("+", total, Cond(cond, Int(1), Int(0)))
                    return total

                # counts agree for every value found at an in-range position of either array;
                # all other values occur in neither, so this is the full multiset equation
                eqs = []
                for j in range(idx[0], idx[1] + 1):
                    within = S.conj([S.le(lo, Int(j)), S.le(Int(j), hi)])
                    for src in (a, b):
                        val = Index(src, Int(j))
                        eqs.append(S.implies(within, S.eq(count(a, val), count(b, val))))
                counts = S.conj(eqs)
                return Binary("and", frame, counts)
            case Index(a, i):
                return Index(go(a), go(i))
            case Store(a, i, x):
                return Store(go(a), go(i), go(x))
            case Unary(op, a):
                return Unary(op, go(a))
            case Binary(op, l, r):
                return Binary(op, go(l), go(r))
            case Cond(c, t, f):
                return Cond(go(c), go(t), go(f))
            case Quant(kind, x, body, lo, hi):
                return Quant(kind, x, go(body), go(lo) if lo is not None else None,
                             go(hi) if hi is not None else None)
            case ArrayExists(x, body):
                return ArrayExists(x, go(body))
        return e

    return go(e)


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_SIMPLE = re.compile(r"^[A-Za-z~!$%^&*_+=<>.?/-][A-Za-z0-9~!$%^&*_+=<>.?/-]*$")
_RESERVED = {"and", "or", "not", "forall", "exists", "let", "ite", "select", "store", "true", "false",
             "assert", "par", "as", "_", "!", "Int", "Bool", "Array"}


def symbol(name: str) -> str:
    if _SIMPLE.match(name) and name not in _RESERVED:
        return name
    if "|" in name or "\\" in name:
        raise EmitError(f"cannot quote identifier {name!r}")
    return f"|{name}|"


def _int(v: int) -> str:
    return str(v) if v >= 0 else f"(- {-v})"


def term(e: Expr, types: dict[str, str]) -> str:
    match e:
        case Int(v):
            return _int(v)
        case Bool(v):
            return "true" if v else "false"
        case Var(n):
            return symbol(n)
        case Index(a, i):
            return f"(select {term(a, types)} {term(i, types)})"
        case Store(a, i, v):
            return f"(store {term(a, types)} {term(i, types)} {term(v, types)})"
        case Unary("neg", a):
            return f"(- {term(a, types)})"
        case Unary("not", a):
            return f"(not {term(a, types)})"
        case Binary(op, l, r):
            if op in ("and", "or"):
                parts = _flatten(e, op)
                return f"({op} " + " ".join(term(p, types) for p in parts) + ")"
            x, y = term(l, types), term(r, types)
            if op == "max":
                return f"(ite (>= {x} {y}) {x} {y})"
            if op == "min":
                return f"(ite (<= {x} {y}) {x} {y})"
            smt = {"->": "=>"}.get(op, op)
            return f"({smt} {x} {y})"
        case Cond(c, t, f):
            return f"(ite {term(c, types)} {term(t, types)} {term(f, types)})"
        case Quant(kind, v, body, lo, hi):
            inner = term(body, types)
            if lo is not None:
                guard = f"(and (<= {term(lo, types)} {symbol(v)}) (<= {symbol(v)} {term(hi, types)}))"
                inner = f"(=> {guard} {inner})" if kind == "forall" else f"(and {guard} {inner})"
            return f"({kind} (({symbol(v)} Int)) {inner})"
        case ArrayExists(v, body):
            raise EmitError(f"array existential over {v} has no witness")
        case Sorted() | Perm():
            raise EmitError("built-in predicate left unexpanded")
    raise EmitError(f"no SMT-LIB encoding for {e!r}")


def _flatten(e: Expr, op: str) -> list[Expr]:
    if isinstance(e, Binary) and e.op == op:
        return _flatten(e.left, op) + _flatten(e.right, op)
    return [e]


def _sort(ty: str) -> str:
    return {ARRAY: "(Array Int Int)", BOOL: "Bool"}.get(ty, "Int")


def _nonlinear(e: Expr) -> bool:
    match e:
        case Binary("*", l, r):
            return not (isinstance(l, Int) or isinstance(r, Int)) or _nonlinear(l) or _nonlinear(r)
        case Binary(_, l, r):
            return _nonlinear(l) or _nonlinear(r)
        case Unary(_, a):
            return _nonlinear(a)
        case Index(a, i):
            return _nonlinear(a) or _nonlinear(i)
        case Store(a, i, v):
            return _nonlinear(a) or _nonlinear(i) or _nonlinear(v)
        case Cond(c, t, f):
            return _nonlinear(c) or _nonlinear(t) or _nonlinear(f)
        case Quant(_, _, body, lo, hi):
            return _nonlinear(body) or (lo is not None and (_nonlinear(lo) or _nonlinear(hi)))
        case ArrayExists(_, body):
            return _nonlinear(body)
    return False


def _skolemize_hyp(hyp: Expr, avoid: set[str]) -> Expr:
    out = []
    for h in S.conjuncts(hyp):
        while isinstance(h, ArrayExists) or (isinstance(h, Quant) and h.kind == "exists" and h.lo is None):
            n = fresh_name(h.var, avoid)
            avoid.add(n)
            h = substitute(h.body, {Var(h.var): Var(n)})
        out.append(h)
    return S.conj(out)


def _witness_concl(concl: Expr, witness: dict[str, Expr]) -> Expr:
    out = []
    for c in S.conjuncts(concl):
        while isinstance(c, (ArrayExists, Quant)) and c.var in witness and \
                (isinstance(c, ArrayExists) or c.kind == "exists"):
            w = witness[c.var]
            body = substitute(c.body, {Var(c.var): w})
            if isinstance(c, Quant) and c.lo is not None:
                body = S.conj([S.le(c.lo, w), S.le(w, c.hi), body])
            c = body
        out.append(c)
    return S.conj(out)


def emit_smtlib(vc: VC, cfg: DomainConfig | None = None, name: str = "", types: dict[str, str] | None = None) -> str:
    """One SMT-LIB 2 script; unsat means the VC holds."""
    idx = index_range(cfg)
    avoid = set(free_vars(vc.hyp) | free_vars(vc.concl))
    hyp = _skolemize_hyp(vc.hyp, avoid)
    # conclusion conjuncts repeated verbatim in the hypothesis add nothing
    given = set(S.conjuncts(vc.hyp))
    concl = S.conj([c for c in S.conjuncts(vc.concl) if c not in given])
    concl = _witness_concl(concl, dict(vc.witness))
    hyp, concl = expand(hyp, idx, avoid), expand(concl, idx, avoid)
    tys = dict(infer_types(None, [hyp, concl]).types)
    if types:
        tys.update({k: v for k, v in types.items() if k in tys})
    names = sorted(free_vars(hyp) | free_vars(concl))
    logic = "AUFNIRA" if _nonlinear(hyp) or _nonlinear(concl) else "AUFLIA"
    perms = []
    for x in list(_walk(vc.hyp)) + list(_walk(vc.concl)):
        if isinstance(x, Perm) and (x.lo, x.hi) not in perms and free_vars(x.lo) | free_vars(x.hi) <= set(names):
            perms.append((x.lo, x.hi))
    lines = []
    if name:
        lines.append(f"; {name}")
    if vc.origin:
        lines.append(f"; origin: {vc.origin}")
    lines.append(f"; {S.show(vc.hyp)}  ->  {S.show(vc.concl)}")
    if perms:
        lines.append(f"; perm value counts range over indices [{idx[0]}, {idx[1]}]")
    lines.append(f"(set-logic {logic})")
    for n in names:
        lines.append(f"(declare-const {symbol(n)} {_sort(tys.get(n, 'int'))})")
    for lo, hi in perms:
        inside = S.conj([S.le(Int(idx[0]), lo), S.le(hi, Int(idx[1]))])
        lines.append(f"(assert {term(S.disj(S.lt(hi, lo), inside), tys)}) ; index range assumption")
    lines.extend(_bijections(vc.hyp, tys, avoid))
    lines.append(f"(assert {term(hyp, tys)})")
    lines.append(f"(assert (not {term(concl, tys)}))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def _bijections(hyp: Expr, tys: dict[str, str], avoid: set[str]) -> list[str]:
    """For each top-level perm in the hypothesis, a Skolem bijection witnessing it."""
    out = []
    for h in S.conjuncts(hyp):
        if not isinstance(h, Perm):
            continue
        f, g = fresh_name("pi", avoid), fresh_name("pi_inv", avoid | {fresh_name("pi", avoid)})
        avoid |= {f, g}
        a, b = term(h.left, tys), term(h.right, tys)
        lo, hi = term(h.lo, tys), term(h.hi, tys)
        f, g = symbol(f), symbol(g)
        inside = f"(and (<= {lo} i) (<= i {hi}))"
        out += [
            f"(declare-fun {f} (Int) Int)",
            f"(declare-fun {g} (Int) Int)",
            f"(assert (forall ((i Int)) (=> {inside} (and (<= {lo} ({f} i)) (<= ({f} i) {hi}) "
            f"(<= {lo} ({g} i)) (<= ({g} i) {hi}) (= ({g} ({f} i)) i) (= ({f} ({g} i)) i) "
            f"(= (select {a} i) (select {b} ({f} i)))))))",
        ]
    return out


def _walk(e: Expr):
    yield e
    match e:
        case Index(a, i):
            yield from _walk(a)
            yield from _walk(i)
        case Store(a, i, v):
            for x in (a, i, v):
                yield from _walk(x)
        case Unary(_, a):
            yield from _walk(a)
        case Binary(_, l, r):
            yield from _walk(l)
            yield from _walk(r)
        case Cond(c, t, f):
            for x in (c, t, f):
                yield from _walk(x)
        case Quant(_, _, body, lo, hi):
            yield from _walk(body)
            if lo is not None:
                yield from _walk(lo)
                yield from _walk(hi)
        case ArrayExists(_, body):
            yield from _walk(body)
        case Sorted(a, lo, hi):
            for x in (a, lo, hi):
                yield from _walk(x)
        case Perm(a, b, lo, hi):
            for x in (a, b, lo, hi):
                yield from _walk(x)


def vc_filename(k: int) -> str:
    return f"vc_{k:04d}.smt2"


def write_scripts(vcs: list[VC], outdir: str | Path, cfg: DomainConfig | None = None) -> list[Path]:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, vc in enumerate(vcs, 1):
        p = out / (f"{vc.id}.smt2" if vc.id else vc_filename(k))
        p.write_text(emit_smtlib(vc, cfg, name=p.stem))
        paths.append(p)
    return paths
