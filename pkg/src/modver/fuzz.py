"""Randomized cross-check of accepted correctness formulas against the interpreter."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import syntax as S
from .assertions import eval_assertion, eval_expr, free_vars
from .discharge import DomainConfig
from .lang import ARRAY, BOOL, infer_types, stmt_vars
from .proof import PARTIAL, TOTAL, Triple
from .semantics import OutOfFuel, State, Stuck, Terminated, run, show_state
from .syntax import Binary, Var

DEFAULT_FUEL = 10**5


@dataclass(frozen=True)
class Violation:
    initial: str
    reason: str
    final: str = ""


@dataclass
class TripleReport:
    name: str
    mode: str
    trials: int = 0
    rejected: int = 0
    diverged: int = 0
    violations: list[Violation] = field(default_factory=list)


@dataclass
class FuzzReport:
    seed: int
    triples: list[TripleReport]

    @property
    def ok(self) -> bool:
        return all(not t.violations for t in self.triples)

    @property
    def violations(self) -> int:
        return sum(len(t.violations) for t in self.triples)


def _sample(rng: random.Random, names: list[str], types: dict[str, str], cfg: DomainConfig) -> dict:
    env: dict[str, object] = {}
    for n in names:
        ty = types.get(n)
        if ty == ARRAY:
            length = rng.randint(0, cfg.array_max_len)
            env[n] = {i: v for i in range(length) if (v := rng.randint(cfg.value_lo, cfg.value_hi)) != 0}
        elif ty == BOOL:
            env[n] = rng.random() < 0.5
        else:
            env[n] = rng.randint(cfg.int_lo, cfg.int_hi)
    return env


def _copies(pre: S.Expr) -> list[tuple[str, S.Expr]]:
    """Equations ``v = e`` of the precondition, used to set ``v`` instead of rejecting."""
    out = []
    for c in S.conjuncts(pre):
        if isinstance(c, Binary) and c.op == "=":
            for lhs, rhs in ((c.right, c.left), (c.left, c.right)):
                if isinstance(lhs, Var) and lhs.name not in free_vars(rhs):
                    out.append((lhs.name, rhs))
                    break
    return out


def fuzz_triple(name: str, t: Triple, decls, trials: int, rng: random.Random,
                cfg: DomainConfig, fuel: int = DEFAULT_FUEL) -> TripleReport:
    program = decls if isinstance(decls, S.Program) else None
    types = infer_types(program, [t.pre, t.post]).types
    names = sorted(free_vars(t.pre) | free_vars(t.post) | stmt_vars(t.stmt))
    copies = _copies(t.pre)
    window = cfg.window()
    rep = TripleReport(name, t.mode)
    attempts = 0
    while rep.trials < trials and attempts < trials * 100:
        attempts += 1
        env = _sample(rng, names, types, cfg)
        for v, e in copies:
            env[v] = eval_expr(e, env, window)
        if not eval_assertion(t.pre, env, window):
            rep.rejected += 1
            continue
        rep.trials += 1
        init = State(env)
        out = run(t.stmt, init, decls, fuel)
        if isinstance(out, OutOfFuel):
            out = run(t.stmt, init, decls, fuel * 10)
        if isinstance(out, Stuck):
            rep.violations.append(Violation(show_state(init), f"stuck: {out.reason}"))
        elif isinstance(out, OutOfFuel):
            rep.diverged += 1
            if t.mode == TOTAL:
                rep.violations.append(Violation(show_state(init), f"no termination within {fuel * 10} steps"))
        elif isinstance(out, Terminated):
            if not eval_assertion(t.post, out.final, window):
                rep.violations.append(Violation(show_state(init), "postcondition fails", show_state(out.final)))
    return rep


def fuzz_soundness(triples, decls, trials: int = 500, seed: int = 0, window: DomainConfig | None = None,
                   fuel: int = DEFAULT_FUEL) -> FuzzReport:
    """Run every ``(name, triple)`` on ``trials`` random states satisfying its precondition."""
    cfg = window or DomainConfig()
    reports = []
    for name, t in triples:
        rng = random.Random(f"{seed}:{name}")
        reports.append(fuzz_triple(name, t, decls, trials, rng, cfg, fuel))
    return FuzzReport(seed, reports)


def bad_triple() -> tuple[str, Triple]:
    """``{true} x := 0 {x = 1}``: never valid, so the harness must flag it."""
    return "self-test", Triple(S.TRUE, S.Assign(Var("x"), S.Int(0)), S.eq(Var("x"), S.Int(1)), PARTIAL)
