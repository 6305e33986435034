import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moealign import phylo
from moealign.errors import DataError
from moealign.fileio import parse_newick
from moealign.msa import AlignedMatrix

from oracles import path_metric, random_binary_tree


def test_pairwise_distance_examples():
    a = AlignedMatrix(("x", "y"), ("AC", "AC"))
    assert phylo.pairwise_distance(a).values[0][1] == 0.0
    b = AlignedMatrix(("x", "y"), ("AC", "AG"))
    assert phylo.pairwise_distance(b).values[0][1] == 0.5
    c = AlignedMatrix(("x", "y"), ("A-", "-A"))
    assert phylo.pairwise_distance(c).values[0][1] == 1.0


def test_pairwise_distance_matrix_shape():
    a = AlignedMatrix(("x", "y", "z"), ("ACR", "AGR", "ACR"))
    dm = phylo.pairwise_distance(a)
    assert dm.labels == ("x", "y", "z")
    assert dm.values[0][2] == 0.0
    assert dm.values[0][1] == dm.values[1][0] == pytest.approx(1 / 3)


def test_neighbor_joining_three_leaves_star():
    dm = phylo.DistanceMatrix(("A", "B", "C"), ((0, 2, 3), (2, 0, 3), (3, 3, 0)))
    tree = neighbor = phylo.neighbor_joining(dm)
    assert neighbor.leaf_labels() == {"A", "B", "C"}
    assert phylo.bipartitions(tree) == frozenset()


def test_neighbor_joining_recovers_quartet_split():
    dm = phylo.DistanceMatrix(
        ("A", "B", "C", "D"),
        ((0, 2, 4, 4), (2, 0, 4, 4), (4, 4, 0, 2), (4, 4, 2, 0)),
    )
    tree = phylo.neighbor_joining(dm)
    assert phylo.bipartitions(tree) == frozenset({frozenset({"A", "B"})})


def test_neighbor_joining_needs_three_labels():
    dm = phylo.DistanceMatrix(("A", "B"), ((0, 1), (1, 0)))
    with pytest.raises(DataError):
        phylo.neighbor_joining(dm)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 10))
def test_neighbor_joining_additive_recovery(seed, n_leaves):
    rng = random.Random(seed)
    true_tree = random_binary_tree(rng, n_leaves)
    estimated = phylo.neighbor_joining(path_metric(true_tree))
    assert phylo.fn_rate(true_tree, estimated) == 0.0


def test_bipartitions_examples():
    quartet = parse_newick("((A,B),(C,D));")
    assert phylo.bipartitions(quartet) == frozenset({frozenset({"A", "B"})})
    star = parse_newick("(A,B,C,D);")
    assert phylo.bipartitions(star) == frozenset()
    caterpillar = parse_newick("((((A,B),C),D),E);")
    assert phylo.bipartitions(caterpillar) == frozenset(
        {frozenset({"A", "B"}), frozenset({"A", "B", "C"})}
    )


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 12))
def test_bipartitions_count_binary_tree(seed, n_leaves):
    tree = random_binary_tree(random.Random(seed), n_leaves)
    assert len(phylo.bipartitions(tree)) == n_leaves - 3


def test_fn_rate_examples():
    t1 = parse_newick("((((A,B),C),D),E);")
    t2 = parse_newick("((((B,C),A),D),E);")
    assert phylo.fn_rate(t1, t1) == 0.0
    assert phylo.fn_rate(t1, t2) == 0.5
    star = parse_newick("(A,B,C,D,E);")
    assert phylo.fn_rate(star, t1) == 0.0  # no internal splits in the truth


def test_fn_rate_leaf_mismatch_lists_difference():
    t1 = parse_newick("((A,B),(C,D));")
    t2 = parse_newick("((A,B),(C,E));")
    with pytest.raises(DataError) as excinfo:
        phylo.fn_rate(t1, t2)
    message = str(excinfo.value)
    assert "D" in message and "E" in message


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 10))
def test_fn_rate_symmetric_for_binary_trees(seed, n_leaves):
    rng = random.Random(seed)
    t1 = random_binary_tree(rng, n_leaves)
    t2 = random_binary_tree(rng, n_leaves)
    assert phylo.fn_rate(t1, t2) == phylo.fn_rate(t2, t1)


def test_parsimony_identical_rows_scores_zero():
    tree = parse_newick("((L1,L2),(L3,L4));")
    aln = AlignedMatrix(("L1", "L2", "L3", "L4"), ("ARC", "ARC", "ARC", "ARC"))
    assert phylo.parsimony_score(tree, aln) == 0


def test_parsimony_fitch_by_hand():
    tree = parse_newick("((L1,L2),(L3,L4));")
    aln = AlignedMatrix(("L1", "L2", "L3", "L4"), ("A", "A", "C", "C"))
    assert phylo.parsimony_score(tree, aln) == 1
    mixed = AlignedMatrix(("L1", "L2", "L3", "L4"), ("A", "C", "A", "C"))
    assert phylo.parsimony_score(tree, mixed) == 2


def test_parsimony_gap_is_missing_data():
    tree = parse_newick("((L1,L2),(L3,L4));")
    aln = AlignedMatrix(("L1", "L2", "L3", "L4"), ("AA", "AA", "-A", "CA"))
    # the gap leaf can take state A or C for free in the first column
    assert phylo.parsimony_score(tree, aln) == 1


def test_parsimony_invariant_to_rooting():
    rng = random.Random(6)
    tree = random_binary_tree(rng, 7)
    rows = tuple("".join(rng.choice("ARNDC-") for _ in range(12)) for _ in range(7))
    rows = tuple(r if r.replace("-", "") else "A" + r[1:] for r in rows)
    aln = AlignedMatrix(tuple(sorted(tree.leaf_labels())), rows)
    scores = {
        phylo.parsimony_score(tree, aln, root=node)
        for node in tree.adjacency
        if node not in tree.labels
    }
    assert len(scores) == 1


def test_parsimony_leaf_mismatch():
    tree = parse_newick("((L1,L2),(L3,L4));")
    aln = AlignedMatrix(("L1", "L2", "L3", "L9"), ("A", "A", "C", "C"))
    with pytest.raises(DataError):
        phylo.parsimony_score(tree, aln)


def test_parsimony_invariant_under_row_permutation():
    rng = random.Random(9)
    tree = random_binary_tree(rng, 6)
    labels = sorted(tree.leaf_labels())
    rows = ["ARNDA", "ARNDC", "ARNCC", "ARRCC", "ADDDD", "ARNDA"]
    aln = AlignedMatrix(tuple(labels), tuple(rows))
    order = list(range(6))
    rng.shuffle(order)
    shuffled = AlignedMatrix(
        tuple(labels[i] for i in order), tuple(rows[i] for i in order)
    )
    assert phylo.parsimony_score(tree, aln) == phylo.parsimony_score(tree, shuffled)
