import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moealign import msa
from moealign.errors import ConfigError, ContractViolation, DataError
from moealign.msa import AlignedMatrix, RawSequence

from oracles import (
    brute_gap,
    brute_simg,
    brute_simng,
    brute_sop,
    random_alignment,
    related_sequences,
)

B62 = msa.blosum62()


def aln(*rows, ids=None):
    ids = ids or tuple(f"s{i}" for i in range(len(rows)))
    return AlignedMatrix(tuple(ids), tuple(rows))


# ---------------------------------------------------------------------------
# objective scores
# ---------------------------------------------------------------------------


def test_simg_worked_examples():
    assert msa.simg(aln("A-C", "AGC", "A-C")) == pytest.approx(1 / 3, abs=1e-12)
    assert msa.simg(aln("AC", "AC")) == 0.0
    assert msa.simg(aln("AA", "A-")) == 0.5


def test_simng_worked_examples():
    assert msa.simng(aln("A-C", "AGC", "A-C")) == 2.0
    assert msa.simng(aln("A-", "-A")) == 0.0
    assert msa.simng(aln("AR", "AR")) == 2.0


def test_sop_worked_examples():
    assert msa.sop(aln("AA", "AA"), B62) == 8.0
    assert msa.sop(aln("A-", "AA"), B62) == 4.0
    assert msa.sop(aln("ARNDC", ids=("only",)), B62) == 0.0


def test_sop_unknown_residue_scores_zero_with_builtin_matrix():
    assert msa.sop(aln("AX", "AX"), B62) == 4.0


def test_sop_missing_symbol_raises_data_error():
    tiny = msa.parse_matrix_text("  A C\nA 1 0\nC 0 1\n")
    with pytest.raises(DataError) as excinfo:
        msa.sop(aln("AW", "AW"), tiny)
    assert "W" in str(excinfo.value)


def test_gap_objective_worked_examples():
    assert msa.gap_objective(aln("A-C", "AGC")) == -1.0
    assert msa.gap_objective(aln("AC", "AC")) == 0.0
    assert msa.gap_objective(aln("--A", "A--")) == -4.0


def test_blosum62_spot_values():
    assert B62.score("A", "A") == 4
    assert B62.score("W", "W") == 11
    assert B62.score("C", "C") == 9
    assert B62.score("E", "Q") == 2
    assert B62.score("Y", "V") == -1
    assert B62.score("N", "D") == B62.score("D", "N") == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_objectives_match_brute_force(seed):
    a = random_alignment(random.Random(seed))
    assert msa.simg(a) == pytest.approx(brute_simg(a), abs=1e-12)
    assert msa.simng(a) == pytest.approx(brute_simng(a), abs=1e-12)
    assert msa.sop(a, B62) == brute_sop(a, B62)
    assert msa.gap_objective(a) == brute_gap(a)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_simg_simng_partition_all_columns(seed):
    # the column sets scored by simg and simng are disjoint and exhaustive
    a = random_alignment(random.Random(seed))
    gapped = sum(1 for col in a.columns() if "-" in col)
    gap_free = sum(1 for col in a.columns() if "-" not in col)
    assert gapped + gap_free == a.width


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gap_objective_identity(seed):
    a = random_alignment(random.Random(seed))
    residues = sum(len(row) - row.count("-") for row in a.rows)
    assert msa.gap_objective(a) == residues - a.width * len(a.rows)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sop_invariant_under_row_reordering(seed):
    rng = random.Random(seed)
    a = random_alignment(rng)
    order = list(range(len(a.rows)))
    rng.shuffle(order)
    shuffled = AlignedMatrix(
        tuple(a.ids[i] for i in order), tuple(a.rows[i] for i in order)
    )
    assert msa.sop(a, B62) == msa.sop(shuffled, B62)


def test_evaluate_negates_maximization_scores():
    problem = msa.MsaProblem(
        [RawSequence("s0", "AC"), RawSequence("s1", "AGC"), RawSequence("s2", "AC")]
    )
    a = aln("A-C", "AGC", "A-C")
    vec = problem.evaluate(a)
    assert vec == (-msa.simg(a), -msa.simng(a), -msa.sop(a, B62), -msa.gap_objective(a))
    assert vec == pytest.approx((-1 / 3, -2.0, -39.0, 2.0), abs=1e-12)
    assert problem.evaluate(a) == vec  # deterministic


def test_evaluate_with_parsimony_appends_fifth_objective():
    seqs = related_sequences(random.Random(0), 4)
    problem = msa.MsaProblem(seqs, objectives=("simg", "simng", "sop", "gap", "parsimony"))
    base = msa.center_star_alignment(seqs)
    vec = problem.evaluate(base)
    assert len(vec) == 5
    assert vec[4] == -msa.parsimony_proxy(base)
    assert vec[4] >= 0.0  # engine minimizes the change count


def test_parsimony_objective_needs_three_sequences():
    seqs = [RawSequence("a", "AC"), RawSequence("b", "AG")]
    with pytest.raises(ConfigError):
        msa.MsaProblem(seqs, objectives=("simg", "simng", "parsimony"))


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def test_normalize_drops_all_gap_columns():
    assert msa.normalize_alignment(aln("A-C", "A-C")).rows == ("AC", "AC")
    kept = aln("AC", "AC")
    assert msa.normalize_alignment(kept) is kept
    assert msa.normalize_alignment(aln("-A-", "-R-")).rows == ("A", "R")


def test_normalize_detects_conservation_breach():
    with pytest.raises(ContractViolation):
        msa.normalize_alignment(aln("AC", "AG"), expected={"s0": "AC", "s1": "AA"})


def test_crossover_worked_example():
    a = aln("AC-G", "A-CG")
    b = aln("ACG-", "ACG-")
    child = msa.crossover_at(a, b, 2)
    assert child.rows == ("AC-G", "A-CG")


def test_crossover_identical_parents_conserves_residues():
    rng = random.Random(1)
    a = random_alignment(rng)
    child = msa.single_point_crossover(a, a, rng)
    assert child.degapped() == a.degapped()


def test_crossover_rejects_mismatched_sequence_sets():
    a = aln("AC", "AG")
    b = aln("AC", "AT" if "T" in msa.AMINO_ACIDS else "AI")
    with pytest.raises(ContractViolation):
        msa.crossover_at(a, b, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_crossover_outputs_are_valid_alignments(seed):
    rng = random.Random(seed)
    base = random_alignment(rng, max_rows=6, max_cols=30)
    other = base
    for _ in range(3):
        other = msa.shift_closed_gaps(other, rng)
    child = msa.single_point_crossover(base, other, rng)
    assert child.degapped() == base.degapped()
    assert len({len(r) for r in child.rows}) == 1
    assert all(any(row[c] != "-" for row in child.rows) for c in range(child.width))


def test_shift_worked_example():
    a = aln("A--CG", "RRRRR")
    # move the single run to the boundary after the second residue ("AC|G")
    shifted = msa.shift_gap_run(a, 0, 0, 2)
    assert shifted.rows[0] == "AC--G"
    assert shifted.rows[0].replace("-", "") == "ACG"
    assert shifted.rows[1] == "RRRRR"


def test_shift_gap_free_alignment_returned_unchanged():
    a = aln("AC", "AG")
    assert msa.shift_closed_gaps(a, random.Random(0)) is a


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_shift_outputs_are_valid_alignments(seed):
    rng = random.Random(seed)
    a = random_alignment(rng, max_rows=6, max_cols=30)
    shifted = msa.shift_closed_gaps(a, rng)
    assert shifted.degapped() == a.degapped()
    assert len({len(r) for r in shifted.rows}) == 1
    assert all(any(row[c] != "-" for row in shifted.rows) for c in range(shifted.width))


# ---------------------------------------------------------------------------
# seeding
# ---------------------------------------------------------------------------


def test_needleman_wunsch_identical_sequences_alignment_is_gap_free():
    score, a, b = msa.needleman_wunsch("ARND", "ARND", B62)
    assert (a, b) == ("ARND", "ARND")
    assert score == sum(B62.score(ch, ch) for ch in "ARND")


def test_needleman_wunsch_gap_placement():
    score, a, b = msa.needleman_wunsch("AC", "AGC", B62)
    assert a.replace("-", "") == "AC"
    assert b == "AGC"
    assert len(a) == len(b) == 3


def test_seed_population_identical_sequences():
    seqs = [RawSequence("a", "ARND"), RawSequence("b", "ARND"), RawSequence("c", "ARND")]
    seeds = msa.seed_population(seqs, 4, random.Random(0))
    assert len(seeds) == 4
    assert seeds[0].rows == ("ARND", "ARND", "ARND")
    assert all(s == seeds[0] for s in seeds[1:])  # gap-free base cannot shift


def test_seed_population_count_one_returns_base_only():
    seqs = related_sequences(random.Random(5), 4)
    seeds = msa.seed_population(seqs, 1, random.Random(1))
    assert seeds == [msa.center_star_alignment(seqs)]


def test_seed_population_needs_two_sequences():
    with pytest.raises(ConfigError):
        msa.seed_population([RawSequence("a", "AC")], 3, random.Random(0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6), st.integers(1, 6))
def test_seed_population_outputs_are_valid(seed, n_seqs, count):
    rng = random.Random(seed)
    seqs = related_sequences(rng, n_seqs, length=25)
    seeds = msa.seed_population(seqs, count, rng)
    assert len(seeds) == count
    expected = {s.id: s.residues for s in seqs}
    for s in seeds:
        assert s.degapped() == expected
        assert len({len(r) for r in s.rows}) == 1
        assert all(any(row[c] != "-" for row in s.rows) for c in range(s.width))
