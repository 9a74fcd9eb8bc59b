"""Export every corpus VC as SMT-LIB and run z3 on each (optional check).

unsat agrees with the bounded verdict; sat would contradict it; a timeout
is reported as inconclusive.
"""

from __future__ import annotations

import argparse
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

from modver.corpus import corpus_entry
from modver.parser import parse_program
from modver.report import number
from modver.smtlib import write_scripts
from modver.stages import check_proofs, parse_proofs


def solve(path: Path, timeout: int) -> str:
    try:
        out = subprocess.run(["z3", f"-T:{timeout}", str(path)], capture_output=True, text=True,
                             timeout=timeout + 10)
    except subprocess.TimeoutExpired:
        return "timeout"
    return (out.stdout.strip().splitlines() or ["error"])[0]


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--timeout", type=int, default=60)
    args = ap.parse_args(argv)
    if shutil.which("z3") is None:
        print("z3 not found; skipping")
        return 0
    entry = corpus_entry("quicksort")
    prog_text, proofs_text, loader = entry.sources()
    result = check_proofs(parse_program(prog_text), parse_proofs(proofs_text, str(entry.proofs_path), loader))
    vcs = number(result.vcs)
    with tempfile.TemporaryDirectory() as tmp:
        paths = write_scripts(vcs, tmp)
        answers = {}
        for vc, p in zip(vcs, paths):
            answers[vc.id] = solve(p, args.timeout)
            print(f"{vc.id}  {answers[vc.id]:<8} {vc.origin}", flush=True)
    sat = [k for k, a in answers.items() if a == "sat"]
    print(f"{len(vcs)} scripts: {sum(a == 'unsat' for a in answers.values())} unsat, {len(sat)} sat")
    return 1 if sat else 0


if __name__ == "__main__":
    sys.exit(main())
