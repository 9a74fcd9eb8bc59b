"""Run Quicksort(0, n-1) on every array of length <= N with entries in [0, V]
and check that the result is sorted and a rearrangement of the input."""

from __future__ import annotations

import argparse
import itertools
import sys
import time
from collections import Counter
from dataclasses import dataclass

from modver.corpus import corpus_entry
from modver.lang import expand_program
from modver.parser import parse_program
from modver.semantics import State, Terminated, array_list, make_array, run_program


@dataclass(frozen=True)
class SweepConfig:
    max_len: int = 6
    value_hi: int = 4
    fuel: int = 10**6


@dataclass
class SweepResult:
    cases: int
    failures: list
    seconds: float


def sweep(cfg: SweepConfig = SweepConfig()) -> SweepResult:
    prog = expand_program(parse_program(corpus_entry("quicksort").program_path.read_text()))
    t0 = time.perf_counter()
    failures, cases = [], 0
    for n in range(cfg.max_len + 1):
        for items in itertools.product(range(cfg.value_hi + 1), repeat=n):
            cases += 1
            out = run_program(prog, State({"a": make_array(items), "x": 0, "y": n - 1}), cfg.fuel)
            if not isinstance(out, Terminated):
                failures.append((items, type(out).__name__))
                continue
            got = array_list(out.final.array("a"), 0, n - 1)
            if got != sorted(got) or Counter(got) != Counter(items):
                failures.append((items, got))
    return SweepResult(cases, failures, time.perf_counter() - t0)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-len", type=int, default=6)
    ap.add_argument("--value-hi", type=int, default=4)
    args = ap.parse_args(argv)
    res = sweep(SweepConfig(args.max_len, args.value_hi))
    print(f"{res.cases} arrays, {len(res.failures)} failures, {res.seconds:.1f}s")
    for f in res.failures[:10]:
        print("  ", f)
    return 1 if res.failures else 0


if __name__ == "__main__":
    sys.exit(main())
