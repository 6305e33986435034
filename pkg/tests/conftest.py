import random

import pytest

from oracles import related_sequences


@pytest.fixture(scope="session")
def toy_sequences():
    """Eight related protein sequences, deterministic across runs."""
    return related_sequences(random.Random(7), count=8, length=40)


@pytest.fixture()
def toy_fasta(tmp_path, toy_sequences):
    from moealign.fileio import write_fasta

    path = tmp_path / "toy.fasta"
    path.write_text(write_fasta(toy_sequences))
    return path
