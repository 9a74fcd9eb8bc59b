import json

import pytest

from modver.cli import main
from modver.corpus import ENTRIES, MUTANTS, UnknownEntry, corpus_entry


def test_entries_resolve():
    for name in ENTRIES:
        e = corpus_entry(name)
        assert e.program_path.is_file()
        assert e.proofs_path is None or e.proofs_path.is_file()
    with pytest.raises(UnknownEntry):
        corpus_entry("bubble")


@pytest.mark.parametrize("m", MUTANTS, ids=lambda m: m.name)
def test_mutant_edits_program_once(m):
    e = corpus_entry("mutations")
    prog, _, _ = e.sources()
    assert m.hits(prog) == 1
    mutated, _, _ = e.sources(m)
    assert mutated != prog


def test_mutants_also_edit_outlines():
    e = corpus_entry("mutations")
    _, _, loader = e.sources()
    _, partition = loader("partition")
    assert any(m.hits(partition) for m in MUTANTS)


@pytest.mark.parametrize("m", MUTANTS, ids=lambda m: m.name)
def test_mutant_refuted(m, capsys):
    code = main(["corpus", "check", "mutations", "--mutant", m.name, "--fail-fast", "--format", "json"])
    out = capsys.readouterr().out
    assert code == 1, out
    doc = json.loads(out.split("\n", 1)[1])
    status = {c["name"]: c["status"] for c in doc["contracts"]}
    assert status[m.violates] == "refuted"


@pytest.mark.slow
def test_partition_standalone_verifies(capsys):
    assert main(["corpus", "check", "partition-standalone"]) == 0
    out = capsys.readouterr().out
    for c in ("P1", "P2", "P3", "P4"):
        assert c in out
    assert "status: VERIFIED(window)" in out
