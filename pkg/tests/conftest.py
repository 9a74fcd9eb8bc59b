from __future__ import annotations

import pytest

from modver.corpus import corpus_entry
from modver.lang import expand_program
from modver.parser import parse_program
from modver.stages import check_proofs, load_proofs


@pytest.fixture(scope="session")
def qs_program():
    return parse_program(corpus_entry("quicksort").program_path.read_text())


@pytest.fixture(scope="session")
def qs_expanded(qs_program):
    return expand_program(qs_program)


@pytest.fixture(scope="session")
def qs_proofs():
    return load_proofs(corpus_entry("quicksort").proofs_path)


@pytest.fixture(scope="session")
def qs_checked(qs_program, qs_proofs):
    return check_proofs(qs_program, qs_proofs)
