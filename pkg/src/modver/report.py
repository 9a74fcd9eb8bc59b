"""Aggregating discharge verdicts into a report with an overall status."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from . import syntax as S
from .discharge import Counterexample, DomainConfig, Unknown, Valid, Verdict, discharge_bounded
from .proof import VC
from .semantics import show_state, show_value
from .smtlib import EmitError, emit_smtlib, vc_filename

SCHEMA = "modver.report/1"

VERIFIED, REFUTED, INCONCLUSIVE = "VERIFIED(window)", "REFUTED", "INCONCLUSIVE"
EXIT = {VERIFIED: 0, REFUTED: 1, INCONCLUSIVE: 3}


def number(vcs: list[VC]) -> list[VC]:
    """Give VCs stable ids ``vc_0001``, ``vc_0002``, ... in list order."""
    return [dataclasses.replace(v, id=vc_filename(k)[:-5]) for k, v in enumerate(vcs, 1)]


@dataclass
class Entry:
    vc: VC
    contract: str
    verdict: Verdict | None  # None when skipped after an earlier refutation
    script: str | None = None

    @property
    def label(self) -> str:
        match self.verdict:
            case Valid():
                return "valid"
            case Counterexample():
                return "counterexample"
            case Unknown():
                return "unknown"
        return "skipped"


@dataclass
class Report:
    window: DomainConfig
    entries: list[Entry] = field(default_factory=list)

    @property
    def status(self) -> str:
        labels = {e.label for e in self.entries}
        if "counterexample" in labels:
            return REFUTED
        if "unknown" in labels:
            return INCONCLUSIVE
        return VERIFIED

    @property
    def exit_code(self) -> int:
        return EXIT[self.status]

    def contract_status(self, name: str) -> str:
        labels = {e.label for e in self.entries if e.contract == name}
        if "counterexample" in labels:
            return "refuted"
        if labels == {"skipped"}:
            return "skipped"
        if labels & {"unknown", "skipped"}:
            return "inconclusive"
        return "verified (window)"

    def counterexamples(self) -> list[Entry]:
        return [e for e in self.entries if isinstance(e.verdict, Counterexample)]


def discharge_report(vcs: list[tuple[str, VC]], cfg: DomainConfig | None = None,
                     export: str | Path | None = None, fail_fast: bool = False,
                     types: dict[str, str] | None = None) -> Report:
    """Discharge ``(contract, vc)`` pairs on the window; Unknown VCs are exported as
    SMT-LIB scripts to ``export`` when it is given."""
    cfg = cfg or DomainConfig()
    rep = Report(cfg)
    refuted = False
    for contract, vc in vcs:
        if refuted and fail_fast:
            rep.entries.append(Entry(vc, contract, None))
            continue
        verdict = discharge_bounded(vc, cfg, types)
        entry = Entry(vc, contract, verdict)
        if isinstance(verdict, Counterexample):
            refuted = True
        elif isinstance(verdict, Unknown) and export is not None:
            out = Path(export)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"{vc.id or 'vc'}.smt2"
            try:
                path.write_text(emit_smtlib(vc, cfg, name=vc.id))
                entry.script = str(path)
            except EmitError as exc:
                entry.script = f"not exported: {exc}"
        rep.entries.append(entry)
    return rep


def _verdict_json(v: Verdict | None) -> dict:
    match v:
        case Valid(rel, states, notes):
            return {"verdict": "valid", "window_relative": rel, "states": states, "notes": list(notes)}
        case Counterexample(state, failed):
            return {"verdict": "counterexample", "state": {k: show_value(state[k]) for k in sorted(state)},
                    "failed": failed}
        case Unknown(reason):
            return {"verdict": "unknown", "reason": reason}
    return {"verdict": "skipped"}


def window_json(cfg: DomainConfig) -> dict:
    return {"int_lo": cfg.int_lo, "int_hi": cfg.int_hi, "array_max_len": cfg.array_max_len,
            "value_lo": cfg.value_lo, "value_hi": cfg.value_hi}


def report_json(rep: Report, contracts: list) -> dict:
    return {
        "schema": SCHEMA,
        "status": rep.status,
        "window": window_json(rep.window),
        "contracts": [
            {"name": c.name, "stage": c.stage, "mode": c.mode, "rule": c.rule,
             "status": rep.contract_status(c.name)}
            for c in contracts
        ],
        "vcs": [
            {"id": e.vc.id, "contract": e.contract, "origin": e.vc.origin,
             "formula": e.vc.show(), **_verdict_json(e.verdict),
             **({"script": e.script} if e.script else {})}
            for e in rep.entries
        ],
    }


def report_text(rep: Report, contracts: list) -> str:
    lines = [f"window: {rep.window.describe()}", ""]
    rows = [("contract", "stage", "mode", "rule", "VCs", "status")]
    for c in contracts:
        rows.append((c.name, c.stage, c.mode, c.rule, str(len(c.vcs)), rep.contract_status(c.name)))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    for r in rows:
        lines.append("  ".join(x.ljust(w) for x, w in zip(r, widths)).rstrip())
    for e in rep.entries:
        if isinstance(e.verdict, Counterexample):
            lines += ["", f"{e.vc.id} ({e.contract}) counterexample: {e.vc.origin}",
                      f"  {e.vc.show()}",
                      f"  state: {show_state(e.verdict.state)}"]
            if e.verdict.failed:
                lines.append(f"  fails: {e.verdict.failed}")
        elif isinstance(e.verdict, Unknown):
            lines += ["", f"{e.vc.id} ({e.contract}) unknown: {e.verdict.reason}", f"  {e.vc.origin}"]
            if e.script:
                lines.append(f"  script: {e.script}")
    lines += ["", f"status: {rep.status}"]
    return "\n".join(lines)


def vc_listing(vcs: list[tuple[str, VC]]) -> str:
    out = []
    for contract, vc in vcs:
        out.append(f"{vc.id}  [{contract}] {vc.origin}")
        out.append(f"    {S.show(vc.hyp)}")
        out.append(f"    -> {S.show(vc.concl)}")
        for name, t in vc.witness:
            out.append(f"    witness {name} := {S.show(t)}")
    return "\n".join(out) + "\n"
