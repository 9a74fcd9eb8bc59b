"""Proof files: named assertions, procedure contracts, derivation scripts,
outlines, and the stage graph that orders contract proofs.

Format (one item after another, ``#`` comments allowed)::

    define K { v < w and ... }
    contract Q2 partial on Quicksort(x, y) pre { ... } post { ... } [bound { t }] [by NAME]
    outline Q2 { annotated statement }
    derive A1 { from Q3; instantiate x, y := m, v }
    stage S2: Q2 uses P1, P2
    import partition          # reads partition.proofs next to this file

Derivation steps: ``from NAME``, ``axiom invariance {p} on P(t)``,
``instantiate x := t``, ``invariance {p}``, ``subst z := t``,
``conseq [pre {p}] [post {q}] [witness x := t]``, ``conj NAME``,
``disj NAME``, ``exists x``, ``decompose NAME``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import syntax as S
from .lang import calls_in, change, decls_vars, infer_types
from .outline import ContractNotInContext, Scope, check_outline
from .parser import Parser, tokenize
from .proof import (
    PARTIAL, TOTAL, VC, Fact, ProofError, RuleInstance, SchemaError, SideConditionError, Triple,
    derive, make_vc,
)
from .syntax import Call, Expr, Var


class CycleError(ProofError):
    pass


# ---------------------------------------------------------------------------
# proof-file model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Contract:
    name: str
    mode: str
    call: Call
    pre: Expr
    post: Expr
    bound: Expr | None = None
    by: str | None = None
    pos: S.Pos = field(default=None, compare=False)

    def triple(self) -> Triple:
        return Triple(self.pre, self.call, self.post, self.mode)


@dataclass(frozen=True)
class Step:
    kind: str
    args: tuple = ()
    pos: S.Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Derivation:
    name: str
    steps: tuple[Step, ...]
    pos: S.Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Stage:
    name: str
    contracts: tuple[str, ...]
    uses: tuple[str, ...] = ()
    pos: S.Pos = field(default=None, compare=False)


@dataclass
class ProofFile:
    macros: dict[str, Expr] = field(default_factory=dict)
    contracts: dict[str, Contract] = field(default_factory=dict)
    outlines: dict[str, S.OSeq] = field(default_factory=dict)
    derivations: dict[str, Derivation] = field(default_factory=dict)
    stages: list[Stage] = field(default_factory=list)


class _ProofParser(Parser):
    loader = None
    seen: set = set()

    def call(self) -> Call:
        p = self.pos()
        name = self.ident()
        args: tuple[Expr, ...] = ()
        if self.at("("):
            self.advance()
            if not self.at(")"):
                args = self.expr_list()
            self.expect(")")
        return Call(name, args, pos=p)

    def braced(self) -> Expr:
        return self.annotation().assertion

    def assignment(self) -> tuple[tuple[str, ...], tuple[Expr, ...]]:
        names = self.ident_list()
        self.expect(":=")
        values = self.expr_list()
        if len(names) != len(values):
            raise self.error("substitution lists differ in length")
        return names, values

    def step(self) -> Step:
        p = self.pos()
        if self.word("from"):
            return Step("from", (self.ident(),), p)
        if self.word("axiom"):
            self.expect_word("invariance")
            inv = self.braced()
            self.expect_word("on")
            return Step("axiom", (inv, self.call()), p)
        if self.word("instantiate"):
            return Step("instantiate", self.assignment(), p)
        if self.word("invariance"):
            return Step("invariance", (self.braced(),), p)
        if self.word("subst"):
            return Step("subst", self.assignment(), p)
        if self.word("conseq"):
            pre = post = None
            witness: dict[str, Expr] = {}
            if self.word("pre"):
                pre = self.braced()
            if self.word("post"):
                post = self.braced()
            if self.word("witness"):
                names, values = self.assignment()
                witness = dict(zip(names, values))
            return Step("conseq", (pre, post, witness), p)
        for kind in ("conj", "disj", "decompose"):
            if self.word(kind):
                return Step(kind, (self.ident(),), p)
        if self.word("exists"):
            return Step("exists", (self.ident(),), p)
        raise self.error(f"unknown derivation step {self.tok.text!r}")

    def proof_file(self, pf: ProofFile | None = None) -> ProofFile:
        pf = pf or ProofFile(macros=self.macros)
        while self.tok.kind != "eof":
            p = self.pos()
            if self.word("import"):
                self._import(self.ident(), pf)
            elif self.word("define"):
                name = self.ident()
                self.macros[name] = self.braced()
            elif self.word("contract"):
                name = self.ident()
                if self.word("partial"):
                    mode = PARTIAL
                elif self.word("total"):
                    mode = TOTAL
                else:
                    raise self.error("expected 'partial' or 'total'")
                self.expect_word("on")
                call = self.call()
                self.expect_word("pre")
                pre = self.braced()
                self.expect_word("post")
                post = self.braced()
                bound = by = None
                if self.word("bound"):
                    bound = self.braced()
                if self.word("by"):
                    by = self.ident()
                if name in pf.contracts:
                    raise self.error(f"contract {name} defined twice")
                pf.contracts[name] = Contract(name, mode, call, pre, post, bound, by, pos=p)
            elif self.word("outline"):
                name = self.ident()
                self.expect("{")
                pf.outlines[name] = self.stmts()
                self.expect("}")
            elif self.word("derive"):
                name = self.ident()
                self.expect("{")
                steps = [self.step()]
                while self.at(";"):
                    self.advance()
                    if self.at("}"):
                        break
                    steps.append(self.step())
                self.expect("}")
                pf.derivations[name] = Derivation(name, tuple(steps), pos=p)
            elif self.word("stage"):
                name = self.ident()
                self.expect(":")
                members = self.ident_list()
                uses: tuple[str, ...] = ()
                if self.word("uses"):
                    uses = self.ident_list()
                pf.stages.append(Stage(name, members, uses, pos=p))
            else:
                raise self.error(f"expected import, define, contract, outline, derive or stage, "
                                 f"found {self.tok.text!r}")
        return pf

    def _import(self, name: str, pf: ProofFile) -> None:
        if self.loader is None:
            raise self.error(f"cannot import {name}: no file context")
        if name in self.seen:
            return
        self.seen.add(name)
        fname, text = self.loader(name)
        sub = _ProofParser(tokenize(text, fname), filename=fname, macros=self.macros)
        sub.loader, sub.seen = self.loader, self.seen
        sub.proof_file(pf)


def _file_loader(filename: str):
    base = Path(filename).parent

    def load(name: str) -> tuple[str, str]:
        path = base / f"{name}.proofs"
        return str(path), path.read_text()

    return load


def parse_proofs(text: str, filename: str = "<proofs>", loader=None) -> ProofFile:
    """Parse a proof file.  ``import NAME`` pulls in ``NAME.proofs`` via ``loader``
    (by default, from the directory of ``filename`` when that is a real path)."""
    if loader is None and Path(filename).is_file():
        loader = _file_loader(filename)
    parser = _ProofParser(tokenize(text, filename), filename=filename)
    parser.loader, parser.seen = loader, set()
    return parser.proof_file()


def load_proofs(path: str | Path) -> ProofFile:
    path = Path(path)
    return parse_proofs(path.read_text(), str(path))


# ---------------------------------------------------------------------------
# stage graph
# ---------------------------------------------------------------------------


def stage_order(pf: ProofFile) -> list[Stage]:
    """Stages in dependency order; a stage depends on the stages owning the contracts it uses."""
    owner: dict[str, str] = {}
    for st in pf.stages:
        for c in st.contracts:
            if c in owner:
                raise SchemaError(f"contract {c} belongs to stages {owner[c]} and {st.name}")
            if c not in pf.contracts:
                raise SchemaError(f"stage {st.name} lists unknown contract {c}")
            owner[c] = st.name
    by_name = {st.name: st for st in pf.stages}
    deps: dict[str, set[str]] = {}
    for st in pf.stages:
        ds = set()
        for u in st.uses:
            if u not in owner:
                raise SchemaError(f"stage {st.name} uses {u}, which no stage proves")
            ds.add(owner[u])
        deps[st.name] = ds
    order: list[str] = []
    state: dict[str, int] = {}

    def visit(n: str, path: list[str]) -> None:
        if state.get(n) == 2:
            return
        if state.get(n) == 1:
            raise CycleError("stage dependency cycle: " + " -> ".join(path + [n]))
        state[n] = 1
        for d in sorted(deps[n], key=[s.name for s in pf.stages].index):
            visit(d, path + [n])
        state[n] = 2
        order.append(n)

    for st in pf.stages:
        visit(st.name, [])
    return [by_name[n] for n in order]


# ---------------------------------------------------------------------------
# checking
# ---------------------------------------------------------------------------


@dataclass
class ContractResult:
    name: str
    stage: str
    mode: str
    rule: str
    vcs: list[VC]


@dataclass
class CheckResult:
    contracts: list[ContractResult]
    facts: dict[str, Fact]

    @property
    def vcs(self) -> list[VC]:
        out = []
        for c in self.contracts:
            out.extend(c.vcs)
        return out


class _StageEnv:
    """Name resolution for one stage: proven contracts, own hypotheses, derivations."""

    def __init__(self, checker: "_ProofChecker", stage: Stage, available: set[str],
                 hyps: dict[str, Fact], z: str | None):
        self.ck = checker
        self.stage = stage
        self.available = available
        self.hyps = hyps
        self.z = z
        self.memo: dict[str, tuple[Fact, list[VC]]] = {}
        self.active: set[str] = set()

    def lookup(self, name: str) -> tuple[Fact, list[VC]]:
        if name in self.hyps:
            return self.hyps[name], []
        if name in self.ck.contracts_pf:
            if name in self.available and name in self.ck.proven:
                return self.ck.proven[name], []
            raise ContractNotInContext(f"stage {self.stage.name}: contract {name} is not available here")
        if name in self.ck.pf.derivations:
            if name not in self.memo:
                if name in self.active:
                    raise CycleError(f"derivation {name} refers to itself")
                self.active.add(name)
                try:
                    self.memo[name] = self.ck.run_derivation(self.ck.pf.derivations[name], self)
                finally:
                    self.active.discard(name)
            return self.memo[name]
        raise ContractNotInContext(f"unknown contract or derivation {name}")


class _ProofChecker:
    def __init__(self, program: S.Program, pf: ProofFile):
        self.program = program
        self.pf = pf
        self.contracts_pf = pf.contracts
        self.proven: dict[str, Fact] = {}
        self.dmap = program.decl_map
        self.var_d = decls_vars(program.decls)
        self.types = infer_types(program, [c.pre for c in pf.contracts.values()]
                                 + [c.post for c in pf.contracts.values()]).types

    def resolve_z(self, e: Expr, env: _StageEnv) -> Expr:
        from .assertions import free_vars, substitute

        if "@z" not in free_vars(e):
            return e
        if env.z is None:
            raise SchemaError("@z used outside a total correctness stage")
        return substitute(e, {Var("@z"): Var(env.z)})

    def run_derivation(self, d: Derivation, env: _StageEnv) -> tuple[Fact, list[VC]]:
        cur: Fact | None = None
        vcs: list[VC] = []
        consts = {env.z} if env.z else set()
        for k, st in enumerate(d.steps, 1):
            origin = f"derive {d.name} step {k}"

            def apply(rule: str, premises=(), witness=None, conclusion=None) -> Fact:
                fact, new = derive(RuleInstance(rule, tuple(premises), conclusion, witness or {}, origin),
                                   None, self.program, consts)
                vcs.extend(new)
                return fact

            def need() -> Fact:
                if cur is None:
                    raise SchemaError(f"{origin}: no current formula (start with `from`)")
                return cur

            try:
                match st.kind:
                    case "from":
                        f, more = env.lookup(st.args[0])
                        vcs.extend(more)
                        cur = f
                    case "axiom":
                        inv, call = st.args
                        mode = TOTAL if env.z else PARTIAL
                        if mode == TOTAL:
                            raise SchemaError(f"{origin}: the invariance axiom is not part of the total correctness systems")
                        cur = apply("INV_AXIOM", witness={"p": self.resolve_z(inv, env), "stmt": call})
                    case "instantiate":
                        names, values = st.args
                        f = need()
                        if not isinstance(f.triple.stmt, Call):
                            raise SchemaError(f"{origin}: can only instantiate procedure calls")
                        generic = tuple(a.name if isinstance(a, Var) else None for a in f.triple.stmt.args)
                        if set(names) != set(n for n in generic if n) or len(names) != len(generic):
                            raise SchemaError(f"{origin}: instantiate must cover the generic variables {generic}")
                        m = dict(zip(names, values))
                        cur = apply("INSTANTIATE", [f], {"args": tuple(m[g] for g in generic)})
                    case "invariance":
                        cur = apply("INV_RULE", [need()], {"p": self.resolve_z(st.args[0], env)})
                    case "subst":
                        names, values = st.args
                        m = {Var(n): self.resolve_z(v, env) for n, v in zip(names, values)}
                        cur = apply("SUBST_RULE", [need()], {"map": m})
                    case "conseq":
                        pre, post, hint = st.args
                        f = need()
                        w = {"pre": self.resolve_z(pre, env) if pre is not None else f.triple.pre,
                             "post": self.resolve_z(post, env) if post is not None else f.triple.post,
                             "hint": {k2: self.resolve_z(v, env) for k2, v in hint.items()}}
                        cur = apply("CONSEQ", [f], w)
                    case "conj" | "disj":
                        other, more = env.lookup(st.args[0])
                        vcs.extend(more)
                        cur = apply("CONJ" if st.kind == "conj" else "DISJ", [need(), other])
                    case "exists":
                        x = st.args[0]
                        f = need()
                        is_array = self.types.get(x) == "array"
                        cur = apply("EXISTS_INTRO", [f], {"var": x, "array": is_array})
                    case "decompose":
                        other, more = env.lookup(st.args[0])
                        vcs.extend(more)
                        cur = apply("DECOMPOSE", [need(), other])
                    case _:
                        raise SchemaError(f"{origin}: unknown step {st.kind}")
            except SideConditionError as exc:
                raise SideConditionError(exc.rule, exc.condition, exc.offending, origin) from None
        if cur is None:
            raise SchemaError(f"derive {d.name}: empty derivation")
        return cur, vcs

    # -- contracts ------------------------------------------------------

    def check(self, only: set[str] | None = None) -> CheckResult:
        results: list[ContractResult] = []
        order = stage_order(self.pf)
        owner = {c: st.name for st in self.pf.stages for c in st.contracts}
        deps_closure: dict[str, set[str]] = {}
        for k, st in enumerate(order):
            if only is not None and st.name not in only:
                continue
            avail: set[str] = set()
            for u in st.uses:
                avail.add(u)
                avail |= deps_closure.get(owner[u], set())
            deps_closure[st.name] = avail | set(st.contracts)
            missing = [u for u in st.uses if u not in self.proven]
            if missing:
                raise ContractNotInContext(f"stage {st.name} uses unproven {', '.join(missing)}")
            results.extend(self.check_stage(st, avail, k))
        return CheckResult(results, dict(self.proven))

    def _generic(self, c: Contract) -> bool:
        d = self.dmap.get(c.call.name)
        if d is None:
            raise SchemaError(f"contract {c.name}: procedure {c.call.name} is not declared")
        if len(d.formals) != len(c.call.args):
            raise SchemaError(f"contract {c.name}: wrong number of arguments")
        return tuple(c.call.args) != tuple(Var(u) for u in d.formals)

    def check_stage(self, st: Stage, avail: set[str], index: int) -> list[ContractResult]:
        members = [self.pf.contracts[n] for n in st.contracts]
        recursive = [c for c in members if c.by is None and self._generic(c)]
        modes = {c.mode for c in recursive}
        if len(modes) > 1:
            raise SchemaError(f"stage {st.name}: recursive contracts mix partial and total correctness")
        total = modes == {TOTAL}
        z = f"_r{index + 1}" if total else None
        hyps: dict[str, Fact] = {}
        bounds: dict[str, Expr] = {}
        for c in recursive:
            bad = {a.name for a in c.call.args if isinstance(a, Var)} & self.var_d
            if not all(isinstance(a, Var) for a in c.call.args) or len(set(c.call.args)) != len(c.call.args):
                raise SchemaError(f"contract {c.name}: a generic call needs distinct simple variables")
            if bad:
                raise SideConditionError("RECURSION_II" if total else "RECURSION",
                                         "var(x) ∩ var(D) = ∅", bad, f"contract {c.name}")
            pre = c.pre
            if total:
                if c.bound is None:
                    raise SchemaError(f"contract {c.name}: total correctness recursion needs a bound")
                bounds[c.name] = c.bound
                pre = S.conj([c.pre, S.lt(c.bound, Var(z))])
            hyps[c.name] = Fact(Triple(pre, c.call, c.post, c.mode), frozenset({c.name}), rule="ASSUME")
        if total and len({S.show(b) for b in bounds.values()}) > 1:
            raise SchemaError(f"stage {st.name}: recursive contracts of one stage share one bound function")

        env = _StageEnv(self, st, avail, hyps, z)
        out: list[ContractResult] = []
        bodies: dict[str, Fact] = {}
        body_vcs: dict[str, list[VC]] = {}
        for c in members:
            if c.by is not None:
                out.append(self.check_by(c, st, avail))
            elif not self._generic(c):
                out.append(self.check_body(c, st, env))
            else:
                fact, vcs = self.check_recursive_body(c, st, env, z)
                bodies[c.name] = fact
                body_vcs[c.name] = vcs
        if recursive:
            rule = "RECURSION_II" if total else ("MODULARITY" if avail else "RECURSION")
            hyp_triples = {c.name: c.triple() for c in recursive}
            for c in recursive:
                inst = RuleInstance(rule, tuple(bodies[r.name] for r in recursive), None,
                                    {"hyps": hyp_triples, "earlier": avail, "z": z, "bounds": bounds,
                                     "conclude": c.name}, f"stage {st.name}")
                fact, vcs = derive(inst, None, self.program)
                self.proven[c.name] = fact
                out.append(ContractResult(c.name, st.name, c.mode, rule, body_vcs[c.name] + vcs))
        order = {n: i for i, n in enumerate(st.contracts)}
        out.sort(key=lambda r: order[r.name])
        return out

    def check_by(self, c: Contract, st: Stage, avail: set[str]) -> ContractResult:
        env = _StageEnv(self, st, avail, {}, None)
        fact, vcs = env.lookup(c.by)
        t = fact.triple
        if t.stmt != c.call:
            raise SchemaError(f"contract {c.name}: {c.by} is about {S.summary(t.stmt)}")
        if c.mode == TOTAL and t.mode != TOTAL:
            raise SchemaError(f"contract {c.name}: {c.by} only establishes partial correctness")
        if fact.assumptions:
            raise SchemaError(f"contract {c.name}: {c.by} rests on hypotheses {sorted(fact.assumptions)}")
        origin = f"contract {c.name}"
        for v in (make_vc(c.pre, t.pre, f"{origin}: CONSEQ pre"), make_vc(t.post, c.post, f"{origin}: CONSEQ post")):
            if v is not None:
                vcs = vcs + [v]
        self.proven[c.name] = Fact(c.triple(), frozenset(), fact.touched, fact.rule)
        return ContractResult(c.name, st.name, c.mode, fact.rule, vcs)

    def check_body(self, c: Contract, st: Stage, env: _StageEnv) -> ContractResult:
        """Contract on a call with the formals themselves: proven from the body alone."""
        d = self.dmap[c.call.name]
        if any(call.name == d.name for call in calls_in(d.body)):
            raise SchemaError(f"contract {c.name}: {d.name} is recursive; state the contract on a generic call")
        clobbered = change(d.body) & set(d.formals)
        if clobbered:
            raise SideConditionError("BLOCK", "body leaves the formal parameters unchanged", clobbered,
                                     f"contract {c.name}")
        if c.name not in self.pf.outlines:
            raise SchemaError(f"contract {c.name}: no outline given")
        scope, extra = self._scope(c, env, None)
        res = check_outline(self.pf.outlines[c.name], c.post, scope, pre=c.pre, expected=d.body)
        if res.assumptions:
            raise SchemaError(f"contract {c.name}: body proof may not use recursion hypotheses")
        self.proven[c.name] = Fact(c.triple(), frozenset(), res.touched, "LOOP_II" if c.mode == TOTAL else "LOOP")
        return ContractResult(c.name, st.name, c.mode, "TD" if c.mode == TOTAL else "PD", extra + res.vcs)

    def check_recursive_body(self, c: Contract, st: Stage, env: _StageEnv, z: str | None):
        d = self.dmap[c.call.name]
        if c.name not in self.pf.outlines:
            raise SchemaError(f"contract {c.name}: no outline given")
        pre = c.pre if z is None else S.conj([c.pre, S.eq(c.bound, Var(z))])
        block = S.Block(d.formals, tuple(c.call.args), d.body)
        scope, extra = self._scope(c, env, z)
        res = check_outline(self.pf.outlines[c.name], c.post, scope, pre=pre, expected=block)
        fact = Fact(Triple(pre, block, c.post, c.mode), res.assumptions, res.touched, "BLOCK")
        return fact, extra + res.vcs

    def _scope(self, c: Contract, env: _StageEnv, z: str | None) -> tuple[Scope, list[VC]]:
        collected: list[VC] = []

        def resolve(name: str) -> Fact:
            fact, vcs = env.lookup(name)
            for v in vcs:
                if v not in collected:
                    collected.append(v)
            return fact

        cands = tuple(env.hyps.values()) + tuple(
            self.proven[n] for n in sorted(env.available) if n in self.proven)
        return Scope(self.program, c.mode, resolve, cands, z, f"contract {c.name}"), collected


def check_proofs(program: S.Program, pf: ProofFile, only: set[str] | None = None) -> CheckResult:
    """Check every stage (or the named ones) and return all VCs with provenance."""
    ck = _ProofChecker(program, pf)
    return ck.check(only)
