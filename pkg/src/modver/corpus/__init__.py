"""Bundled case studies: Quicksort with Partition, Partition alone, a
name-clash negative, and mutants of Quicksort that must be refuted."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..discharge import DomainConfig

ENTRIES = ("quicksort", "partition-standalone", "name-clash-negative", "mutations")


class UnknownEntry(KeyError):
    pass


def corpus_dir() -> Path:
    return Path(str(resources.files(__name__)))


def read(name: str) -> str:
    return (corpus_dir() / name).read_text()


@dataclass(frozen=True)
class Mutant:
    """A textual change applied alike to the program and its proof files,
    so that outlines still match the mutated statements."""

    name: str
    pattern: str
    replacement: str
    violates: str  # contract expected to fail
    note: str

    def apply(self, text: str) -> str:
        return re.sub(self.pattern, self.replacement, text)

    def hits(self, text: str) -> int:
        return len(re.findall(self.pattern, text))


MUTANTS = (
    Mutant("drop-swap", r"swap\(a\[le\], a\[ri\]\);\s*", "", "P3",
           "without the exchange the left part may keep elements above the pivot"),
    Mutant("drop-advance", r";\s*le, ri := le \+ 1, ri - 1", "", "P4",
           "after a swap of equal elements the outer loop makes no progress"),
    Mutant("outer-strict", r"while le <= ri", "while le < ri", "P3",
           "exit with le = ri leaves a[le] in both halves, so le > ri fails"),
    Mutant("guard-strict", r"if le <= ri then", "if le < ri then", "P4",
           "when le = ri nothing changes and the outer loop spins"),
    Mutant("scan-nonstrict", r"while a\[le\] < pi", "while a[le] <= pi", "P4",
           "the left scan runs past n over zero entries"),
    Mutant("swap-halves", r"begin local v, w := ri, le", "begin local v, w := le, ri", "Q4",
           "the recursive calls cover segments that need not shrink"),
)


@dataclass
class CorpusEntry:
    name: str
    description: str
    program: str  # file name inside the corpus directory
    proofs: str | None
    expected: dict[str, str] = field(default_factory=dict)  # contract -> verdict
    expected_exit: int = 0
    window: DomainConfig = field(default_factory=DomainConfig)
    mutants: tuple[Mutant, ...] = ()

    @property
    def program_path(self) -> Path:
        return corpus_dir() / self.program

    @property
    def proofs_path(self) -> Path | None:
        return corpus_dir() / self.proofs if self.proofs else None

    def sources(self, mutant: Mutant | None = None) -> tuple[str, str | None, object]:
        """Program text, proof text and an import loader, with ``mutant`` applied."""
        fix = mutant.apply if mutant else (lambda t: t)

        def loader(name: str) -> tuple[str, str]:
            path = corpus_dir() / f"{name}.proofs"
            return str(path), fix(path.read_text())

        proofs = fix(read(self.proofs)) if self.proofs else None
        return fix(read(self.program)), proofs, loader

    def mutant(self, name: str) -> Mutant:
        for m in self.mutants:
            if m.name == name:
                return m
        raise UnknownEntry(f"{self.name} has no mutant {name!r}")


def _verified(names: str) -> dict[str, str]:
    return {n: "verified" for n in names.split()}


def corpus_entry(name: str) -> CorpusEntry:
    if name == "quicksort":
        return CorpusEntry(
            name, "Quicksort and Partition; staged proofs of P1-P4, Q1-Q4 and total Q1",
            "quicksort.whp", "quicksort.proofs", _verified("P1 P2 P3 P4 Q2 Q3 Q4 Q1 Q1T"))
    if name == "partition-standalone":
        return CorpusEntry(
            name, "Partition alone; P1-P3 partial and P4 total from loop invariants",
            "partition.whp", "partition.proofs", _verified("P1 P2 P3 P4"))
    if name == "name-clash-negative":
        return CorpusEntry(
            name, "main-program local shadowing a variable of a declaration; rejected as ill-formed",
            "name_clash.whp", None, {}, expected_exit=2)
    if name == "mutations":
        return CorpusEntry(
            name, "single-edit mutants of Quicksort; each must be refuted",
            "quicksort.whp", "quicksort.proofs", {m.name: "refuted" for m in MUTANTS},
            expected_exit=1, mutants=MUTANTS)
    raise UnknownEntry(name)
