"""Parsing and serialization: FASTA, Newick, weight tables, run manifests.

Parsers reject structurally invalid input instead of repairing it, and every
parse error carries a line number or character offset. All writers are
byte-deterministic for a fixed input.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

from .errors import ConfigError, DataError, ParseError
from .msa import (
    DEFAULT_ALPHABET,
    GAP,
    AlignedMatrix,
    RawSequence,
    SubstitutionMatrix,
    parse_matrix_text,
)
from .phylo import PhyloTree, tree_from_edges

FASTA_WRAP = 60


# ---------------------------------------------------------------------------
# FASTA
# ---------------------------------------------------------------------------


def parse_fasta(text: str, alphabet: str = DEFAULT_ALPHABET):
    """Parse FASTA text into raw sequences or an aligned matrix.

    Ids are the first whitespace-delimited header token; sequence lines are
    concatenated, uppercased, and '.' is normalized to '-'. Returns an
    :class:`AlignedMatrix` when all records share one length and any record
    contains a gap, otherwise a list of :class:`RawSequence`.
    """
    legal = set(alphabet.upper()) | {GAP}
    records: list[list] = []  # [id, [chunks], header_line]
    seen_ids: set[str] = set()
    current: list | None = None
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith(">"):
            header = line[1:].strip()
            if not header:
                raise ParseError("empty FASTA header", line=line_no)
            sid = header.split()[0]
            if sid in seen_ids:
                raise ParseError(f"duplicate sequence id {sid!r}", line=line_no)
            seen_ids.add(sid)
            current = [sid, [], line_no]
            records.append(current)
        else:
            if current is None:
                raise ParseError("sequence data before the first '>' header", line=line_no)
            chunk = "".join(line.split()).upper().replace(".", GAP)
            for ch in chunk:
                if ch not in legal:
                    raise ParseError(f"illegal symbol {ch!r}", line=line_no)
            current[1].append(chunk)
    if not records:
        raise ParseError("no FASTA records found", line=1)

    entries = []
    for sid, chunks, header_line in records:
        seq = "".join(chunks)
        if not seq:
            raise ParseError(f"record {sid!r} has no sequence data", line=header_line)
        entries.append((sid, seq, header_line))

    lengths = {len(seq) for _, seq, _ in entries}
    has_gap = any(GAP in seq for _, seq, _ in entries)
    if has_gap:
        if len(lengths) != 1:
            raise ParseError(
                "gapped records must all share one aligned length",
                line=entries[0][2],
            )
        for sid, seq, header_line in entries:
            if seq.count(GAP) == len(seq):
                raise ParseError(f"record {sid!r} is entirely gaps", line=header_line)
        return AlignedMatrix(
            tuple(sid for sid, _, _ in entries), tuple(seq for _, seq, _ in entries)
        )
    return [RawSequence(sid, seq) for sid, seq, _ in entries]


def write_fasta(records) -> str:
    """Serialize raw sequences or an aligned matrix, wrapped at 60 columns."""
    if isinstance(records, AlignedMatrix):
        pairs = list(zip(records.ids, records.rows))
    else:
        pairs = [(r.id, r.residues) for r in records]
    if not pairs:
        raise DataError("refusing to write an empty FASTA file")
    lines = []
    for sid, seq in pairs:
        lines.append(f">{sid}")
        for start in range(0, len(seq), FASTA_WRAP):
            lines.append(seq[start:start + FASTA_WRAP])
    return "\n".join(lines) + "\n"


def as_alignment(parsed) -> AlignedMatrix:
    """Coerce a parse_fasta result to an alignment (gap-free input allowed)."""
    if isinstance(parsed, AlignedMatrix):
        return parsed
    lengths = {len(r.residues) for r in parsed}
    if len(lengths) != 1:
        raise DataError("records differ in length and contain no gaps: not an alignment")
    return AlignedMatrix(
        tuple(r.id for r in parsed), tuple(r.residues for r in parsed)
    )


# ---------------------------------------------------------------------------
# Newick
# ---------------------------------------------------------------------------

_LABEL_STOP = set("(),:;")


class _NewickParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.next_id = 0
        self.edges: list[tuple[int, int, float]] = []
        self.labels: dict[int, str] = {}

    def error(self, message: str) -> ParseError:
        return ParseError(message, offset=self.pos)

    def peek(self) -> str:
        self.skip_ws()
        if self.pos >= len(self.text):
            raise ParseError("unexpected end of Newick text", offset=self.pos)
        return self.text[self.pos]

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def new_node(self) -> int:
        node = self.next_id
        self.next_id += 1
        return node

    def parse_label(self) -> str | None:
        self.skip_ws()
        if self.pos >= len(self.text):
            return None
        ch = self.text[self.pos]
        if ch == "'":
            start = self.pos
            self.pos += 1
            out = []
            while True:
                if self.pos >= len(self.text):
                    self.pos = start
                    raise self.error("unterminated quoted label")
                ch = self.text[self.pos]
                if ch == "'":
                    if self.pos + 1 < len(self.text) and self.text[self.pos + 1] == "'":
                        out.append("'")
                        self.pos += 2
                        continue
                    self.pos += 1
                    return "".join(out)
                out.append(ch)
                self.pos += 1
        out = []
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in _LABEL_STOP or ch.isspace():
                break
            out.append(ch)
            self.pos += 1
        return "".join(out) if out else None

    def parse_length(self) -> float | None:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ":":
            return None
        self.pos += 1
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _LABEL_STOP.union("()"):
            if self.text[self.pos].isspace():
                break
            self.pos += 1
        token = self.text[start:self.pos]
        try:
            value = float(token)
        except ValueError:
            self.pos = start
            raise self.error(f"invalid branch length {token!r}") from None
        if not math.isfinite(value):
            self.pos = start
            raise self.error(f"non-finite branch length {token!r}")
        if value < 0.0:
            self.pos = start
            raise self.error(f"negative branch length {token!r}")
        return value

    def parse_clade(self) -> tuple[int, float | None]:
        node = self.new_node()
        if self.peek() == "(":
            self.pos += 1
            while True:
                child, length = self.parse_clade()
                self.edges.append((node, child, 0.0 if length is None else length))
                ch = self.peek()
                if ch == ",":
                    self.pos += 1
                    continue
                if ch == ")":
                    self.pos += 1
                    break
                raise self.error(f"expected ',' or ')', found {ch!r}")
            self.parse_label()  # internal label, ignored for splits
        else:
            label_at = self.pos
            label = self.parse_label()
            if label is None:
                raise self.error("expected a leaf label")
            if label in self.labels.values():
                raise ParseError(f"duplicate leaf label {label!r}", offset=label_at)
            self.labels[node] = label
        return node, self.parse_length()


def parse_newick(text: str) -> PhyloTree:
    """Parse one Newick tree; returns the unrooted form.

    Branch lengths, quoted labels and internal labels (ignored) are
    supported. Rooted (degree-2 root) input is unrooted by merging the two
    root edges; trees with fewer than 3 leaves are rejected.
    """
    parser = _NewickParser(text)
    parser.skip_ws()
    parser.parse_clade()
    parser.skip_ws()
    if parser.pos >= len(text) or text[parser.pos] != ";":
        raise ParseError("missing ';' terminator", offset=parser.pos)
    parser.pos += 1
    parser.skip_ws()
    if parser.pos < len(text):
        raise ParseError("trailing content after ';'", offset=parser.pos)

    adjacency: dict[int, dict[int, float]] = {}
    for u, v, length in parser.edges:
        adjacency.setdefault(u, {})[v] = length
        adjacency.setdefault(v, {})[u] = length
    if not adjacency:
        raise ParseError("tree has no edges (fewer than 3 leaves)", offset=0)

    # Unroot: drop unlabeled stubs, merge through unlabeled degree-2 nodes.
    changed = True
    while changed:
        changed = False
        for node in list(adjacency):
            if node in parser.labels:
                continue
            nbrs = adjacency[node]
            if len(nbrs) == 1:
                (other,) = nbrs
                del adjacency[other][node]
                del adjacency[node]
                changed = True
            elif len(nbrs) == 2:
                (a, la), (b, lb) = nbrs.items()
                del adjacency[a][node]
                del adjacency[b][node]
                del adjacency[node]
                adjacency[a][b] = la + lb
                adjacency[b][a] = la + lb
                changed = True

    if len(parser.labels) < 3:
        raise ParseError(
            f"tree has {len(parser.labels)} leaves; at least 3 required", offset=0
        )
    tree = PhyloTree(adjacency=adjacency, labels=dict(parser.labels))
    tree.validate()
    return tree


def _quote_label(label: str) -> str:
    if label and not any(ch in _LABEL_STOP or ch.isspace() or ch == "'" for ch in label):
        return label
    return "'" + label.replace("'", "''") + "'"


def _format_length(value: float) -> str:
    return repr(float(value))


def write_newick(tree: PhyloTree) -> str:
    """Canonical Newick form: rooted at the smallest leaf's neighbor,
    children ordered by their smallest descendant label."""
    tree.validate()
    leaf_nodes = tree.leaf_nodes()
    root = next(iter(tree.adjacency[leaf_nodes[min(leaf_nodes)]]))

    min_label: dict[tuple[int, int], str] = {}

    def smallest(node: int, parent: int) -> str:
        key = (node, parent)
        if key in min_label:
            return min_label[key]
        if node in tree.labels:
            result = tree.labels[node]
        else:
            result = min(smallest(v, node) for v in tree.adjacency[node] if v != parent)
        min_label[key] = result
        return result

    def emit(node: int, parent: int) -> str:
        if node in tree.labels:
            return _quote_label(tree.labels[node])
        kids = sorted(
            (v for v in tree.adjacency[node] if v != parent),
            key=lambda v: smallest(v, node),
        )
        inner = ",".join(
            f"{emit(v, node)}:{_format_length(tree.adjacency[node][v])}" for v in kids
        )
        return f"({inner})"

    kids = sorted(tree.adjacency[root], key=lambda v: smallest(v, root))
    inner = ",".join(
        f"{emit(v, root)}:{_format_length(tree.adjacency[root][v])}" for v in kids
    )
    return f"({inner});"


# ---------------------------------------------------------------------------
# Weight tables
# ---------------------------------------------------------------------------


def parse_weights(text: str, m: int) -> list[tuple[float, ...]]:
    """One weight vector per line, comma or whitespace separated.

    Rows are normalized to sum to one; '#' starts a comment. Wrong
    dimension, negative entries, all-zero rows and duplicate (normalized)
    rows are rejected with the offending line number.
    """
    vectors: list[tuple[float, ...]] = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(f"bad weight value: {exc}", line=line_no) from None
        if len(values) != m:
            raise ParseError(f"expected {m} weights, got {len(values)}", line=line_no)
        if any(not math.isfinite(v) for v in values):
            raise ParseError("weights must be finite", line=line_no)
        if any(v < 0.0 for v in values):
            raise ParseError("weights must be non-negative", line=line_no)
        total = sum(values)
        if total <= 0.0:
            raise ParseError("weight row sums to zero", line=line_no)
        vec = tuple(v / total for v in values)
        if vec in vectors:
            raise ParseError("duplicate weight vector after normalization", line=line_no)
        vectors.append(vec)
    if not vectors:
        raise ParseError("no weight vectors found", line=1)
    return vectors


def write_weights(vectors: Sequence[Sequence[float]]) -> str:
    lines = [" ".join(repr(float(v)) for v in vec) for vec in vectors]
    return "\n".join(lines) + "\n"


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first, *rest)


def generate_weights(m: int, count: int, rng=None) -> list[tuple[float, ...]]:
    """Deterministic weight table from the smallest simplex lattice.

    Picks the smallest lattice resolution whose size reaches ``count``,
    always keeps the m unit vectors, then greedily adds the candidate
    maximizing its minimum distance to the selection (ties resolved by
    lattice enumeration order, so the rng argument is unused).
    """
    if m < 2:
        raise ConfigError(f"need m >= 2 objectives, got {m}")
    if count < m:
        raise ConfigError(f"count must be >= m={m}, got {count}")
    h = 1
    while math.comb(h + m - 1, m - 1) < count:
        h += 1
    lattice = [tuple(c / h for c in comp) for comp in _compositions(h, m)]
    units = []
    for j in range(m):
        unit = tuple(1.0 if i == j else 0.0 for i in range(m))
        units.append(unit)
    selected = list(units)
    chosen = set(selected)
    candidates = [v for v in lattice if v not in chosen]
    while len(selected) < count:
        best = max(candidates, key=lambda v: min(math.dist(v, s) for s in selected))
        selected.append(best)
        candidates.remove(best)
    return selected


# ---------------------------------------------------------------------------
# Substitution matrix files and manifests
# ---------------------------------------------------------------------------


def parse_substitution_matrix(text: str) -> SubstitutionMatrix:
    return parse_matrix_text(text)


def parse_manifest(text: str) -> dict[str, str]:
    """Line-oriented key=value pairs with '#' comments."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key=value", line=line_no)
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ParseError("empty key", line=line_no)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", line=line_no)
        out[key] = value.strip()
    return out


def write_manifest(entries: dict[str, str]) -> str:
    lines = [f"{key}={entries[key]}" for key in sorted(entries)]
    return "\n".join(lines) + "\n"
