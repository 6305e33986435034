"""Tree estimation and tree-accuracy measurement.

Trees are unrooted, leaf-labeled, with non-negative branch lengths, stored
as an adjacency map over integer node ids. The module provides normalized
mismatch distances from an alignment, neighbor joining, split (bipartition)
extraction, the false-negative rate between trees, and a small-parsimony
change count usable as an alignment quality proxy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from .errors import ConfigError, ContractViolation, DataError

GAP = "-"


class AlignmentLike(Protocol):
    """Structural view of an alignment: named equal-length rows."""

    ids: tuple[str, ...]
    rows: tuple[str, ...]


@dataclass(frozen=True)
class DistanceMatrix:
    labels: tuple[str, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise DataError("distance matrix labels must be unique")
        if len(self.values) != n or any(len(row) != n for row in self.values):
            raise DataError("distance matrix must be square")
        for i in range(n):
            if self.values[i][i] != 0.0:
                raise DataError(f"non-zero diagonal at {self.labels[i]!r}")
            for j in range(i + 1, n):
                if self.values[i][j] != self.values[j][i]:
                    raise DataError(f"asymmetry at {self.labels[i]!r}/{self.labels[j]!r}")
                if self.values[i][j] < 0.0:
                    raise DataError("distances must be non-negative")

    def size(self) -> int:
        return len(self.labels)


@dataclass
class PhyloTree:
    """Unrooted tree: adjacency with branch lengths, labels on leaf nodes."""

    adjacency: dict[int, dict[int, float]]
    labels: dict[int, str]

    def degree(self, node: int) -> int:
        return len(self.adjacency[node])

    def leaf_labels(self) -> set[str]:
        return set(self.labels.values())

    def leaf_nodes(self) -> dict[str, int]:
        return {label: node for node, label in self.labels.items()}

    def edges(self) -> list[tuple[int, int, float]]:
        out = []
        for u, nbrs in self.adjacency.items():
            for v, length in nbrs.items():
                if u < v:
                    out.append((u, v, length))
        return out

    def validate(self) -> None:
        labels = list(self.labels.values())
        if len(set(labels)) != len(labels):
            raise DataError("leaf labels must be unique")
        for node, nbrs in self.adjacency.items():
            if node in self.labels:
                if len(nbrs) != 1:
                    raise DataError(f"leaf {self.labels[node]!r} has degree {len(nbrs)}")
            elif len(nbrs) < 3:
                raise DataError(f"internal node {node} has degree {len(nbrs)} (< 3)")
            for v, length in nbrs.items():
                if self.adjacency.get(v, {}).get(node) != length:
                    raise DataError("adjacency is not symmetric")
                if length < 0.0:
                    raise DataError("branch lengths must be non-negative")
        # connectivity
        nodes = list(self.adjacency)
        seen = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            for v in self.adjacency[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != len(nodes):
            raise DataError("tree is not connected")


def tree_from_edges(
    edges: Sequence[tuple[int, int, float]], labels: dict[int, str]
) -> PhyloTree:
    adjacency: dict[int, dict[int, float]] = {}
    for u, v, length in edges:
        adjacency.setdefault(u, {})[v] = length
        adjacency.setdefault(v, {})[u] = length
    tree = PhyloTree(adjacency=adjacency, labels=dict(labels))
    tree.validate()
    return tree


def pairwise_distance(aln: AlignmentLike) -> DistanceMatrix:
    """Normalized mismatch distance over columns where both rows hold residues.

    Rows with no comparable column get distance 1.0 (maximal dissimilarity).
    """
    rows = aln.rows
    n = len(rows)
    if n < 2:
        raise DataError(f"need at least 2 rows, got {n}")
    values = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            comparable = 0
            mismatches = 0
            for a, b in zip(rows[i], rows[j]):
                if a != GAP and b != GAP:
                    comparable += 1
                    if a != b:
                        mismatches += 1
            d = mismatches / comparable if comparable else 1.0
            values[i][j] = values[j][i] = d
    return DistanceMatrix(tuple(aln.ids), tuple(tuple(r) for r in values))


def neighbor_joining(dm: DistanceMatrix) -> PhyloTree:
    """Agglomerative neighbor joining; returns an unrooted binary tree.

    Join ties are broken by the lowest (label-order, then creation-order)
    pair, and negative inferred branch lengths are clamped to zero, so the
    result is deterministic for a fixed matrix.
    """
    n = dm.size()
    if n < 3:
        raise DataError(f"neighbor joining needs >= 3 labels, got {n}")
    labels = {i: lab for i, lab in enumerate(dm.labels)}
    dist: dict[int, dict[int, float]] = {
        i: {j: dm.values[i][j] for j in range(n) if j != i} for i in range(n)
    }
    active = list(range(n))
    next_node = n
    edges: list[tuple[int, int, float]] = []

    while len(active) > 3:
        size = len(active)
        totals = {i: sum(dist[i][j] for j in active if j != i) for i in active}
        best: tuple[int, int] | None = None
        best_q = 0.0
        for ai in range(size):
            for bi in range(ai + 1, size):
                i, j = active[ai], active[bi]
                q = (size - 2) * dist[i][j] - totals[i] - totals[j]
                if best is None or q < best_q:
                    best, best_q = (i, j), q
        i, j = best  # type: ignore[misc]
        u = next_node
        next_node += 1
        d_ij = dist[i][j]
        li = 0.5 * d_ij + (totals[i] - totals[j]) / (2 * (size - 2))
        lj = d_ij - li
        edges.append((u, i, max(0.0, li)))
        edges.append((u, j, max(0.0, lj)))
        dist[u] = {}
        for k in active:
            if k in (i, j):
                continue
            d_uk = 0.5 * (dist[i][k] + dist[j][k] - d_ij)
            dist[u][k] = d_uk
            dist[k][u] = d_uk
        active = [k for k in active if k not in (i, j)] + [u]

    x, y, z = active
    center = next_node
    lx = 0.5 * (dist[x][y] + dist[x][z] - dist[y][z])
    ly = 0.5 * (dist[x][y] + dist[y][z] - dist[x][z])
    lz = 0.5 * (dist[x][z] + dist[y][z] - dist[x][y])
    edges.append((center, x, max(0.0, lx)))
    edges.append((center, y, max(0.0, ly)))
    edges.append((center, z, max(0.0, lz)))
    return tree_from_edges(edges, labels)


def _leafset_below(tree: PhyloTree, child: int, parent: int) -> frozenset[str]:
    """Labels reachable from ``child`` without crossing the edge to ``parent``."""
    out: set[str] = set()
    stack = [(child, parent)]
    while stack:
        node, prev = stack.pop()
        if node in tree.labels:
            out.add(tree.labels[node])
        for nxt in tree.adjacency[node]:
            if nxt != prev:
                stack.append((nxt, node))
    return frozenset(out)


def bipartitions(tree: PhyloTree) -> frozenset[frozenset[str]]:
    """Non-trivial splits induced by internal edges, in canonical form.

    Each split is stored as the side containing the lexicographically
    smallest leaf label. A binary unrooted tree over n leaves yields
    exactly n - 3 splits; a star tree yields none.
    """
    all_labels = frozenset(tree.labels.values())
    anchor = min(all_labels)
    splits: set[frozenset[str]] = set()
    for u, v, _ in tree.edges():
        if u in tree.labels or v in tree.labels:
            continue
        side = _leafset_below(tree, v, u)
        if len(side) < 2 or len(all_labels - side) < 2:
            continue
        splits.add(side if anchor in side else all_labels - side)
    return frozenset(splits)


def fn_rate(true_tree: PhyloTree, est_tree: PhyloTree) -> float:
    """Fraction of the true tree's internal splits missing from the estimate.

    Zero by convention when the true tree has no internal splits. For binary
    trees this equals the symmetric (Robinson-Foulds style) normalized count.
    """
    true_leaves = true_tree.leaf_labels()
    est_leaves = est_tree.leaf_labels()
    if true_leaves != est_leaves:
        diff = sorted(true_leaves.symmetric_difference(est_leaves))
        raise DataError(f"leaf sets differ; symmetric difference: {', '.join(diff)}")
    true_splits = bipartitions(true_tree)
    if not true_splits:
        return 0.0
    missing = len(true_splits - bipartitions(est_tree))
    return missing / len(true_splits)


def parsimony_score(tree: PhyloTree, aln: AlignmentLike, root: int | None = None) -> int:
    """Minimum number of state changes over all columns (small parsimony).

    Gap symbols are treated as missing data (any state). Computed with the
    count-based bottom-up rule, which handles multifurcating nodes exactly
    for unit change costs; the result is independent of the rooting node.
    """
    leaf_nodes = tree.leaf_nodes()
    tree_labels = set(leaf_nodes)
    aln_labels = set(aln.ids)
    if tree_labels != aln_labels:
        diff = sorted(tree_labels.symmetric_difference(aln_labels))
        raise DataError(f"tree leaves and alignment rows differ: {', '.join(diff)}")

    if root is None:
        smallest = leaf_nodes[min(tree_labels)]
        root = next(iter(tree.adjacency[smallest]))
    if root in tree.labels:
        raise ContractViolation("parsimony root must be an internal node")

    # Post-order over (node, parent); children lists are rebuilt once.
    order: list[tuple[int, int | None]] = []
    stack: list[tuple[int, int | None]] = [(root, None)]
    children: dict[int, list[int]] = {}
    while stack:
        node, parent = stack.pop()
        order.append((node, parent))
        kids = [v for v in tree.adjacency[node] if v != parent]
        children[node] = kids
        for v in kids:
            stack.append((v, node))
    order.reverse()

    row_by_label = dict(zip(aln.ids, aln.rows))
    width = len(aln.rows[0])
    total = 0
    for col in range(width):
        symbols = sorted({row_by_label[lab][col] for lab in aln_labels} - {GAP})
        if len(symbols) < 2:
            continue
        bit = {sym: 1 << k for k, sym in enumerate(symbols)}
        full = (1 << len(symbols)) - 1
        state: dict[int, int] = {}
        for node, _parent in order:
            if node in tree.labels:
                ch = row_by_label[tree.labels[node]][col]
                state[node] = full if ch == GAP else bit[ch]
            else:
                counts = [0] * len(symbols)
                for kid in children[node]:
                    mask = state[kid]
                    for k in range(len(symbols)):
                        if mask & (1 << k):
                            counts[k] += 1
                top = max(counts)
                state[node] = sum(1 << k for k, c in enumerate(counts) if c == top)
                total += len(children[node]) - top
    return total
