"""Discharge every VC of a corpus entry on the window and print per-VC timings."""

from __future__ import annotations

import argparse
import sys
import time

from modver.corpus import corpus_entry
from modver.discharge import DomainConfig, discharge_bounded
from modver.parser import parse_program
from modver.report import number
from modver.stages import check_proofs, parse_proofs


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("entry", nargs="?", default="quicksort")
    ap.add_argument("--only", nargs="*", default=[])
    args = ap.parse_args(argv)
    entry = corpus_entry(args.entry)
    prog_text, proofs_text, loader = entry.sources()
    result = check_proofs(parse_program(prog_text), parse_proofs(proofs_text, str(entry.proofs_path), loader))
    cfg = DomainConfig()
    pairs = [(c.name, v) for c in result.contracts if not args.only or c.name in args.only for v in c.vcs]
    vcs = number([v for _, v in pairs])
    total = time.perf_counter()
    bad = 0
    for (contract, _), vc in zip(pairs, vcs):
        t0 = time.perf_counter()
        verdict = discharge_bounded(vc, cfg)
        kind = type(verdict).__name__
        bad += kind != "Valid"
        print(f"{vc.id}  {contract:<4} {time.perf_counter() - t0:7.2f}s  {kind:<14} {vc.origin}", flush=True)
    print(f"{len(vcs)} VCs, {bad} not valid, {time.perf_counter() - total:.1f}s")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
