"""Command-line entry point: ``modver check|run|vcs|fuzz|corpus``.

Exit codes: 0 verified / success, 1 refuted, 2 parse or well-formedness
error (including rejected proof scripts), 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import syntax as S
from .corpus import ENTRIES, UnknownEntry, corpus_entry
from .discharge import DomainConfig
from .fuzz import DEFAULT_FUEL as FUZZ_FUEL
from .fuzz import bad_triple, fuzz_soundness
from .lang import MacroError, expand_program, well_formed
from .parser import ParseError, parse_program
from .proof import ProofError
from .report import SCHEMA, discharge_report, number, report_json, report_text, vc_listing, window_json
from .semantics import DEFAULT_FUEL, OutOfFuel, Stuck, parse_state, run_program, show_state, show_value, trace
from .smtlib import EmitError, write_scripts
from .stages import CheckResult, check_proofs, parse_proofs

OK, REFUTED, ILL_FORMED, INCONCLUSIVE = 0, 1, 2, 3


@dataclass
class CliConfig:
    command: str
    program: str | None = None
    proofs: str | None = None
    window: DomainConfig = field(default_factory=DomainConfig)
    fuel: int | None = None
    trials: int = 500
    seed: int = 0
    fmt: str = "human"


class Failure(Exception):
    """Diagnostic plus exit code."""

    def __init__(self, message: str, code: int = ILL_FORMED):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# loading
# ---------------------------------------------------------------------------


def load_program(text: str, filename: str) -> S.Program:
    try:
        prog = parse_program(text, filename)
    except ParseError as exc:
        raise Failure(f"parse error: {exc}")
    wf = well_formed(prog)
    if not wf.ok:
        raise Failure(wf.format(filename))
    return prog


def load_checked(prog_text: str, prog_name: str, proofs_text: str, proofs_name: str,
                 loader=None) -> tuple[S.Program, CheckResult]:
    prog = load_program(prog_text, prog_name)
    try:
        pf = parse_proofs(proofs_text, proofs_name, loader=loader)
        return prog, check_proofs(prog, pf)
    except ParseError as exc:
        raise Failure(f"parse error: {exc}")
    except (ProofError, MacroError) as exc:
        raise Failure(f"proof rejected: {type(exc).__name__}: {exc}")


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise Failure(f"cannot read {path}: {exc.strerror}")


def _select(result: CheckResult, only: list[str] | None) -> list:
    if not only:
        return list(result.contracts)
    wanted = set(only)
    known = {c.name for c in result.contracts} | {c.stage for c in result.contracts}
    missing = wanted - known
    if missing:
        raise Failure(f"unknown contract or stage: {', '.join(sorted(missing))}")
    return [c for c in result.contracts if c.name in wanted or c.stage in wanted]


def _numbered(contracts: list) -> list[tuple[str, object]]:
    pairs = [(c.name, v) for c in contracts for v in c.vcs]
    return list(zip([n for n, _ in pairs], number([v for _, v in pairs])))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=False))
    else:
        print(text)


def verify(prog_text, prog_name, proofs_text, proofs_name, args, loader=None, first: str | None = None) -> int:
    _, result = load_checked(prog_text, prog_name, proofs_text, proofs_name, loader)
    contracts = _select(result, args.only)
    vcs = _numbered(contracts)
    if first:
        # look where the failure is expected first; ids keep their original numbering
        vcs.sort(key=lambda cv: cv[0] != first)
    rep = discharge_report(vcs, window_from(args), export=args.export, fail_fast=args.fail_fast)
    _emit(args, report_json(rep, contracts), report_text(rep, contracts))
    return rep.exit_code


def cmd_check(args) -> int:
    return verify(_read(args.program), args.program, _read(args.proofs), args.proofs, args)


def cmd_run(args) -> int:
    prog = expand_program(load_program(_read(args.program), args.program))
    try:
        init = parse_state(args.input or "")
    except ValueError as exc:
        raise Failure(str(exc))
    fuel = args.fuel or DEFAULT_FUEL
    records = []
    if args.trace:
        configs = trace(prog.main, init, prog, fuel)
        for k in range(1, len(configs)):
            before, after = configs[k - 1].state.vals, configs[k].state.vals
            delta = {n: show_value(after[n]) for n in sorted(after)
                     if n not in before or before[n] != after[n]}
            records.append({"step": k, "stmt": S.summary(configs[k - 1].stmt, 60), "delta": delta})
    out = run_program(prog, init, fuel)
    payload = {"schema": SCHEMA.replace("report", "run"), "input": show_state(init)}
    lines = []
    if args.trace:
        payload["trace"] = records
        for r in records:
            d = ", ".join(f"{k}={v}" for k, v in r["delta"].items())
            lines.append(f"{r['step']:6d}  {r['stmt']:<60}  {d}".rstrip())
    if isinstance(out, OutOfFuel):
        payload.update(outcome="out-of-fuel", steps=out.steps)
        lines.append(f"out of fuel after {out.steps} steps")
        code = INCONCLUSIVE
    elif isinstance(out, Stuck):
        payload.update(outcome="stuck", reason=out.reason)
        lines.append(f"stuck: {out.reason}")
        code = REFUTED
    else:
        final = _visible(out.final, init)
        payload.update(outcome="terminated", steps=out.steps, final=final)
        lines.append(final)
        code = OK
    _emit(args, payload, "\n".join(lines))
    return code


def _visible(final, init) -> str:
    """Input variables and every variable with a non-default value; reserved temporaries hidden."""
    shown = set(init.vals) | set(final.normalized())
    return show_state({n: final.get(n) for n in sorted(shown) if not n.startswith("_")})


def cmd_vcs(args) -> int:
    _, result = load_checked(_read(args.program), args.program, _read(args.proofs), args.proofs)
    contracts = _select(result, args.only)
    vcs = _numbered(contracts)
    if args.smtlib:
        try:
            paths = write_scripts([v for _, v in vcs], args.smtlib, window_from(args))
        except EmitError as exc:
            raise Failure(f"cannot encode: {exc}")
        if args.format != "json":
            for p in paths:
                print(p)
    if args.format == "json":
        print(json.dumps({"schema": SCHEMA.replace("report", "vcs"),
                          "vcs": [{"id": v.id, "contract": c, "origin": v.origin,
                                   "hyp": S.show(v.hyp), "concl": S.show(v.concl)} for c, v in vcs]},
                         indent=2))
    elif not args.smtlib:
        sys.stdout.write(vc_listing(vcs))
    return OK


def cmd_fuzz(args) -> int:
    _, result = load_checked(_read(args.program), args.program, _read(args.proofs), args.proofs)
    prog = expand_program(load_program(_read(args.program), args.program))
    facts = [(c.name, result.facts[c.name].triple) for c in _select(result, args.only)]
    if args.self_test:
        facts.append(bad_triple())
    rep = fuzz_soundness(facts, prog, args.trials, args.seed, window_from(args), args.fuel or FUZZ_FUEL)
    payload = {
        "schema": SCHEMA.replace("report", "fuzz"), "seed": rep.seed, "window": window_json(window_from(args)),
        "triples": [{"name": t.name, "mode": t.mode, "trials": t.trials, "rejected": t.rejected,
                     "diverged": t.diverged,
                     "violations": [v.__dict__ for v in t.violations]} for t in rep.triples],
    }
    lines = [f"seed {rep.seed}, window {window_from(args).describe()}"]
    for t in rep.triples:
        lines.append(f"{t.name:<10} {t.mode:<8} trials={t.trials} rejected={t.rejected} "
                     f"diverged={t.diverged} violations={len(t.violations)}")
        for v in t.violations[:3]:
            lines.append(f"    {v.reason}: from {v.initial}" + (f" to {v.final}" if v.final else ""))
    lines.append("no violations" if rep.ok else f"{rep.violations} violation(s)")
    _emit(args, payload, "\n".join(lines))
    return OK if rep.ok else REFUTED


def cmd_corpus(args) -> int:
    if args.action == "list" or args.name is None:
        for n in ENTRIES:
            e = corpus_entry(n)
            print(f"{n:<22} {e.description}")
        return OK
    try:
        entry = corpus_entry(args.name)
    except UnknownEntry:
        raise Failure(f"unknown corpus entry {args.name!r}; try: {', '.join(ENTRIES)}")
    if args.action == "show":
        print(f"{entry.name}: {entry.description}")
        print(f"program: {entry.program_path}")
        if entry.proofs_path:
            print(f"proofs:  {entry.proofs_path}")
        for k, v in entry.expected.items():
            print(f"  {k}: {v}")
        for m in entry.mutants:
            print(f"  mutant {m.name}: violates {m.violates}; {m.note}")
        return OK
    if entry.proofs is None:
        try:
            load_program(entry.sources()[0], str(entry.program_path))
        except Failure as exc:
            print(exc)
            return exc.code
        return OK
    if not entry.mutants:
        prog, proofs, loader = entry.sources()
        return verify(prog, str(entry.program_path), proofs, str(entry.proofs_path), args, loader)
    picked = [entry.mutant(args.mutant)] if args.mutant else list(entry.mutants)
    codes = []
    for m in picked:
        print(f"== mutant {m.name}: expected to violate {m.violates}")
        prog, proofs, loader = entry.sources(m)
        try:
            codes.append(verify(prog, f"{m.name}.whp", proofs, f"{m.name}.proofs", args, loader, m.violates))
        except Failure as exc:
            print(exc)
            codes.append(exc.code)
    if args.mutant:
        return codes[0]
    # the suite succeeds when every mutant is refuted
    return OK if all(c == REFUTED for c in codes) else REFUTED


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def config_from(args) -> CliConfig:
    return CliConfig(
        args.command, getattr(args, "program", None), getattr(args, "proofs", None),
        DomainConfig(args.window_lo, args.window_hi, args.array_max_len, args.value_lo, args.value_hi),
        getattr(args, "fuel", None), getattr(args, "trials", 500), getattr(args, "seed", 0), args.format)


def window_from(args) -> DomainConfig:
    return config_from(args).window


def _window_flags(p: argparse.ArgumentParser) -> None:
    d = DomainConfig()
    g = p.add_argument_group("window")
    g.add_argument("--window-lo", type=int, default=d.int_lo)
    g.add_argument("--window-hi", type=int, default=d.int_hi)
    g.add_argument("--array-max-len", type=int, default=d.array_max_len)
    g.add_argument("--value-lo", type=int, default=d.value_lo)
    g.add_argument("--value-hi", type=int, default=d.value_hi)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("human", "json"), default="human")
    _window_flags(p)


def _only(p: argparse.ArgumentParser) -> None:
    p.add_argument("--only", type=lambda s: [x for x in s.split(",") if x],
                   help="comma-separated contract or stage names")


def _check_flags(p: argparse.ArgumentParser) -> None:
    _only(p)
    p.add_argument("--export", metavar="DIR", help="write SMT-LIB scripts for unknown VCs here")
    p.add_argument("--fail-fast", action="store_true", help="stop discharging after a counterexample")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modver", description="Verify recursive while-programs.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="check proofs and discharge their VCs")
    p.add_argument("program")
    p.add_argument("proofs")
    _check_flags(p)
    _common(p)

    p = sub.add_parser("run", help="interpret the main statement")
    p.add_argument("program")
    p.add_argument("--input", default="", help='initial state, e.g. "a=[3,1,2]; x=0; y=2"')
    p.add_argument("--trace", action="store_true")
    p.add_argument("--fuel", type=int)
    _common(p)

    p = sub.add_parser("vcs", help="list VCs or write SMT-LIB scripts")
    p.add_argument("program")
    p.add_argument("proofs")
    _only(p)
    p.add_argument("--smtlib", metavar="DIR")
    _common(p)

    p = sub.add_parser("fuzz", help="cross-check accepted contracts on random states")
    p.add_argument("program")
    p.add_argument("proofs")
    _only(p)
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fuel", type=int)
    p.add_argument("--self-test", action="store_true", help="also fuzz {true} x := 0 {x = 1}")
    _common(p)

    p = sub.add_parser("corpus", help="list, show or check bundled case studies")
    p.add_argument("action", choices=("list", "show", "check"), nargs="?", default="list")
    p.add_argument("name", nargs="?")
    p.add_argument("--mutant")
    _check_flags(p)
    _common(p)
    return ap


COMMANDS = {"check": cmd_check, "run": cmd_run, "vcs": cmd_vcs, "fuzz": cmd_fuzz, "corpus": cmd_corpus}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except Failure as exc:
        print(exc, file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
