"""Multiple sequence alignment domain: genotype, objectives and operators.

An alignment is a rectangular character matrix over the residue alphabet
plus the gap symbol '-'. Every operator in this module conserves residues
(degapping any row always reproduces the original sequence), keeps rows
rectangular, and strips columns that became entirely gaps.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from . import phylo
from .errors import ConfigError, ContractViolation, DataError, ParseError

GAP = "-"
AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
# 'X' is accepted as an unknown residue; every substitution pair involving
# it scores zero in the built-in matrix.
DEFAULT_ALPHABET = AMINO_ACIDS + "X"

OBJECTIVE_NAMES = ("simg", "simng", "sop", "gap", "parsimony")

_BLOSUM62_TEXT = """\
   A  R  N  D  C  Q  E  G  H  I  L  K  M  F  P  S  T  W  Y  V
A  4 -1 -2 -2  0 -1 -1  0 -2 -1 -1 -1 -1 -2 -1  1  0 -3 -2  0
R -1  5  0 -2 -3  1  0 -2  0 -3 -2  2 -1 -3 -2 -1 -1 -3 -2 -3
N -2  0  6  1 -3  0  0  0  1 -3 -3  0 -2 -3 -2  1  0 -4 -2 -3
D -2 -2  1  6 -3  0  2 -1 -1 -3 -4 -1 -3 -3 -1  0 -1 -4 -3 -3
C  0 -3 -3 -3  9 -3 -4 -3 -3 -1 -1 -3 -1 -2 -3 -1 -1 -2 -2 -1
Q -1  1  0  0 -3  5  2 -2  0 -3 -2  1  0 -3 -1  0 -1 -2 -1 -2
E -1  0  0  2 -4  2  5 -2  0 -3 -3  1 -2 -3 -1  0 -1 -3 -2 -2
G  0 -2  0 -1 -3 -2 -2  6 -2 -4 -4 -2 -3 -3 -2  0 -2 -2 -3 -3
H -2  0  1 -1 -3  0  0 -2  8 -3 -3 -1 -2 -1 -2 -1 -2 -2  2 -3
I -1 -3 -3 -3 -1 -3 -3 -4 -3  4  2 -3  1  0 -3 -2 -1 -3 -1  3
L -1 -2 -3 -4 -1 -2 -3 -4 -3  2  4 -2  2  0 -3 -2 -1 -2 -1  1
K -1  2  0 -1 -3  1  1 -2 -1 -3 -2  5 -1 -3 -1  0 -1 -3 -2 -2
M -1 -1 -2 -3 -1  0 -2 -3 -2  1  2 -1  5  0 -2 -1 -1 -1 -1  1
F -2 -3 -3 -3 -2 -3 -3 -3 -1  0  0 -3  0  6 -4 -2 -2  1  3 -1
P -1 -2 -2 -1 -3 -1 -1 -2 -2 -3 -3 -1 -2 -4  7 -1 -1 -4 -3 -2
S  1 -1  1  0 -1  0  0  0 -1 -2 -2  0 -1 -2 -1  4  1 -3 -2 -2
T  0 -1  0 -1 -1 -1 -1 -2 -2 -1 -1 -1 -1 -2 -1  1  5 -2 -2  0
W -3 -3 -4 -4 -2 -2 -3 -2 -2 -3 -2 -3 -1  1 -4 -3 -2 11  2 -3
Y -2 -2 -2 -3 -2 -1 -2 -3  2 -1 -1 -2 -1  3 -3 -2 -2  2  7 -1
V  0 -3 -3 -3 -1 -2 -2 -3 -3  3  1 -2  1 -1 -2 -2  0 -3 -1  4
"""


@dataclass(frozen=True)
class RawSequence:
    """An unaligned named sequence; never contains the gap symbol."""

    id: str
    residues: str

    def __post_init__(self) -> None:
        if not self.id:
            raise DataError("sequence id must be non-empty")
        if not self.residues:
            raise DataError(f"sequence {self.id!r} is empty")
        if GAP in self.residues:
            raise DataError(f"sequence {self.id!r} contains the gap symbol")


@dataclass(frozen=True)
class AlignedMatrix:
    """Rectangular alignment over named rows; the MSA genotype.

    Construction enforces rectangularity, unique ids and at least one
    residue per row. All-gap columns are legal here (intermediate operator
    states have them) and are removed by :func:`normalize_alignment`.
    """

    ids: tuple[str, ...]
    rows: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.rows:
            raise DataError("alignment needs at least one row")
        if len(self.ids) != len(self.rows):
            raise DataError(f"{len(self.ids)} ids for {len(self.rows)} rows")
        if len(set(self.ids)) != len(self.ids):
            raise DataError("alignment row ids must be unique")
        width = len(self.rows[0])
        if width == 0:
            raise DataError("alignment width must be >= 1")
        for sid, row in zip(self.ids, self.rows):
            if len(row) != width:
                raise DataError(f"row {sid!r} has length {len(row)}, expected {width}")
            if row.count(GAP) == len(row):
                raise DataError(f"row {sid!r} consists entirely of gaps")

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def columns(self) -> Iterable[tuple[str, ...]]:
        return zip(*self.rows)

    def degapped(self) -> dict[str, str]:
        return {sid: row.replace(GAP, "") for sid, row in zip(self.ids, self.rows)}

    def sequences(self) -> list[RawSequence]:
        return [RawSequence(sid, row.replace(GAP, "")) for sid, row in zip(self.ids, self.rows)]

    def gap_count(self) -> int:
        return sum(row.count(GAP) for row in self.rows)


class SubstitutionMatrix:
    """Symmetric integer substitution scores over a residue alphabet."""

    def __init__(self, scores: Mapping[tuple[str, str], int]):
        self._scores = dict(scores)
        for (a, b), v in self._scores.items():
            if self._scores.get((b, a)) != v:
                raise DataError(f"substitution matrix asymmetric at {a!r}/{b!r}")

    def symbols(self) -> set[str]:
        return {a for a, _ in self._scores}

    def score(self, a: str, b: str) -> int:
        try:
            return self._scores[(a, b)]
        except KeyError:
            missing = a if (a, a) not in self._scores else b
            raise DataError(f"symbol {missing!r} is not covered by the substitution matrix")


def parse_matrix_text(text: str) -> SubstitutionMatrix:
    """Parse a whitespace-separated square matrix with symbol header row/column."""
    rows = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            rows.append((line_no, line.split()))
    if not rows:
        raise ParseError("substitution matrix text is empty", line=1)
    _, header = rows[0]
    symbols = [s.upper() for s in header]
    if len(set(symbols)) != len(symbols):
        raise ParseError("duplicate symbols in matrix header", line=rows[0][0])
    if len(rows) - 1 != len(symbols):
        raise ParseError(
            f"expected {len(symbols)} matrix rows, got {len(rows) - 1}", line=rows[0][0]
        )
    scores: dict[tuple[str, str], int] = {}
    for (line_no, parts), expect in zip(rows[1:], symbols):
        label = parts[0].upper()
        if label != expect:
            raise ParseError(f"row label {label!r} does not match header {expect!r}", line=line_no)
        if len(parts) != len(symbols) + 1:
            raise ParseError(f"row {label!r} has {len(parts) - 1} values", line=line_no)
        for sym, value in zip(symbols, parts[1:]):
            try:
                scores[(label, sym)] = int(value)
            except ValueError:
                raise ParseError(f"non-integer score {value!r}", line=line_no) from None
    return SubstitutionMatrix(scores)


def blosum62() -> SubstitutionMatrix:
    """The standard BLOSUM62 matrix, extended so 'X' pairs score zero."""
    base = parse_matrix_text(_BLOSUM62_TEXT)
    scores = dict(base._scores)
    for sym in list(base.symbols()) + ["X"]:
        scores[("X", sym)] = 0
        scores[(sym, "X")] = 0
    return SubstitutionMatrix(scores)


# ---------------------------------------------------------------------------
# Objectives. All four scores are maximization-oriented as defined; the
# engine-facing vector negates them (see MsaProblem.evaluate).
# ---------------------------------------------------------------------------


def simg(aln: AlignedMatrix) -> float:
    """Summed majority-residue ratio over columns that contain >= 1 gap."""
    n_rows = len(aln.rows)
    total = 0.0
    for col in aln.columns():
        if GAP in col:
            counts = Counter(ch for ch in col if ch != GAP)
            if counts:
                total += max(counts.values()) / n_rows
    return total


def simng(aln: AlignedMatrix) -> float:
    """Summed majority-residue ratio over gap-free columns."""
    n_rows = len(aln.rows)
    total = 0.0
    for col in aln.columns():
        if GAP not in col:
            total += max(Counter(col).values()) / n_rows
    return total


def sop(aln: AlignedMatrix, matrix: SubstitutionMatrix) -> float:
    """Sum-of-pairs substitution score; pairs involving a gap contribute 0."""
    total = 0
    for col in aln.columns():
        residues = [ch for ch in col if ch != GAP]
        for a, b in combinations(residues, 2):
            total += matrix.score(a, b)
    return float(total)


def gap_objective(aln: AlignedMatrix) -> float:
    """Negated total gap count (gap minimization as a maximization score)."""
    return float(-aln.gap_count())


def parsimony_proxy(aln: AlignedMatrix) -> float:
    """Negated parsimony score of the alignment's own distance tree.

    Estimates a tree by neighbor joining on normalized mismatch distances,
    then counts Fitch parsimony changes; negation makes it maximization-
    oriented like the other objectives. Needs >= 3 rows.
    """
    tree = phylo.neighbor_joining(phylo.pairwise_distance(aln))
    return -float(phylo.parsimony_score(tree, aln))


# ---------------------------------------------------------------------------
# Operators.
# ---------------------------------------------------------------------------


def normalize_alignment(
    aln: AlignedMatrix, expected: Mapping[str, str] | None = None
) -> AlignedMatrix:
    """Drop all-gap columns; optionally verify residue conservation."""
    keep = [c for c in range(aln.width) if any(row[c] != GAP for row in aln.rows)]
    if len(keep) == aln.width:
        result = aln
    else:
        rows = tuple("".join(row[c] for c in keep) for row in aln.rows)
        result = AlignedMatrix(aln.ids, rows)
    if expected is not None:
        got = result.degapped()
        for sid, residues in expected.items():
            if got.get(sid) != residues:
                raise ContractViolation(f"row {sid!r} no longer degaps to its source sequence")
    return result


def _position_after_residues(row: str, count: int) -> int:
    """Index in ``row`` immediately after its ``count``-th residue (0 -> 0)."""
    if count == 0:
        return 0
    seen = 0
    for i, ch in enumerate(row):
        if ch != GAP:
            seen += 1
            if seen == count:
                return i + 1
    raise ContractViolation(f"row holds fewer than {count} residues")


def _check_same_sequences(a: AlignedMatrix, b: AlignedMatrix) -> dict[str, str]:
    da, db = a.degapped(), b.degapped()
    if da != db:
        raise ContractViolation("parents do not align the same sequence set")
    return da


def crossover_at(a: AlignedMatrix, b: AlignedMatrix, cut: int) -> AlignedMatrix:
    """Deterministic core of single-point crossover at column ``cut`` of ``a``.

    Takes a's columns [0, cut) as the left block; for each row, b is cut
    immediately after the residues consumed by that left block, the right
    pieces are left-padded with gaps to a common width, and the blocks are
    concatenated and normalized.
    """
    if not 1 <= cut <= a.width - 1:
        raise ContractViolation(f"cut must be in [1, {a.width - 1}], got {cut}")
    expected = _check_same_sequences(a, b)
    b_rows = dict(zip(b.ids, b.rows))
    lefts = [row[:cut] for row in a.rows]
    rights = []
    for sid, left in zip(a.ids, lefts):
        consumed = cut - left.count(GAP)
        brow = b_rows[sid]
        rights.append(brow[_position_after_residues(brow, consumed):])
    pad_to = max(len(r) for r in rights)
    rows = tuple(
        left + GAP * (pad_to - len(right)) + right for left, right in zip(lefts, rights)
    )
    return normalize_alignment(AlignedMatrix(a.ids, rows), expected)


def single_point_crossover(
    a: AlignedMatrix, b: AlignedMatrix, rng: random.Random
) -> AlignedMatrix:
    """Single-point crossover at a uniformly drawn cut column of parent a."""
    if a.width < 2:
        _check_same_sequences(a, b)
        return normalize_alignment(a)
    return crossover_at(a, b, rng.randint(1, a.width - 1))


def gap_runs(row: str) -> list[tuple[int, int]]:
    """Maximal gap runs of a row as (start, length) pairs."""
    runs = []
    start = None
    for i, ch in enumerate(row):
        if ch == GAP:
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i - start))
            start = None
    if start is not None:
        runs.append((start, len(row) - start))
    return runs


def shift_gap_run(aln: AlignedMatrix, row_idx: int, run_idx: int, boundary: int) -> AlignedMatrix:
    """Deterministic core of the gap-shift mutation.

    Removes the ``run_idx``-th maximal gap run of row ``row_idx`` and
    reinserts a run of the same length immediately after the ``boundary``-th
    residue of that row (0 puts it at the row start). Row length is
    unchanged before normalization.
    """
    row = aln.rows[row_idx]
    start, length = gap_runs(row)[run_idx]
    removed = row[:start] + row[start + length:]
    pos = _position_after_residues(removed, boundary)
    new_row = removed[:pos] + GAP * length + removed[pos:]
    rows = list(aln.rows)
    rows[row_idx] = new_row
    return normalize_alignment(AlignedMatrix(aln.ids, tuple(rows)), aln.degapped())


def shift_closed_gaps(aln: AlignedMatrix, rng: random.Random) -> AlignedMatrix:
    """Move one randomly chosen maximal gap run of a random row elsewhere.

    If the drawn row has no gaps the alignment is returned unchanged.
    """
    row_idx = rng.randrange(len(aln.rows))
    row = aln.rows[row_idx]
    runs = gap_runs(row)
    if not runs:
        return aln
    run_idx = rng.randrange(len(runs))
    residues = len(row) - row.count(GAP)
    boundary = rng.randint(0, residues)
    return shift_gap_run(aln, row_idx, run_idx, boundary)


# ---------------------------------------------------------------------------
# Seeding: center-star progressive alignment plus gap-shift perturbations.
# ---------------------------------------------------------------------------

DEFAULT_GAP_PENALTY = -4


def needleman_wunsch(
    s: str, t: str, matrix: SubstitutionMatrix, gap_penalty: int = DEFAULT_GAP_PENALTY
) -> tuple[int, str, str]:
    """Global pairwise alignment with linear gap penalty.

    Returns (score, aligned_s, aligned_t). Traceback ties prefer the
    diagonal, then consuming ``s``, so results are deterministic.
    """
    n, m = len(s), len(t)
    score = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        score[i][0] = i * gap_penalty
    for j in range(1, m + 1):
        score[0][j] = j * gap_penalty
    for i in range(1, n + 1):
        row_prev, row_cur = score[i - 1], score[i]
        si = s[i - 1]
        for j in range(1, m + 1):
            diag = row_prev[j - 1] + matrix.score(si, t[j - 1])
            up = row_prev[j] + gap_penalty
            left = row_cur[j - 1] + gap_penalty
            row_cur[j] = max(diag, up, left)
    out_s: list[str] = []
    out_t: list[str] = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and score[i][j] == score[i - 1][j - 1] + matrix.score(s[i - 1], t[j - 1]):
            out_s.append(s[i - 1])
            out_t.append(t[j - 1])
            i -= 1
            j -= 1
        elif i > 0 and score[i][j] == score[i - 1][j] + gap_penalty:
            out_s.append(s[i - 1])
            out_t.append(GAP)
            i -= 1
        else:
            out_s.append(GAP)
            out_t.append(t[j - 1])
            j -= 1
    return score[n][m], "".join(reversed(out_s)), "".join(reversed(out_t))


def center_star_alignment(
    seqs: Sequence[RawSequence],
    matrix: SubstitutionMatrix | None = None,
    gap_penalty: int = DEFAULT_GAP_PENALTY,
) -> AlignedMatrix:
    """Progressive alignment around the sequence closest to all others.

    The center maximizes the summed pairwise global-alignment score (ties
    broken by lower index). Every other sequence is aligned against the
    center pairwise and merged under the usual once-a-gap-always-a-gap
    column bookkeeping.
    """
    if len(seqs) < 2:
        raise ConfigError(f"need at least 2 sequences, got {len(seqs)}")
    if len({s.id for s in seqs}) != len(seqs):
        raise DataError("duplicate sequence ids")
    matrix = matrix or blosum62()

    n = len(seqs)
    sums = [0] * n
    for i in range(n):
        for j in range(i + 1, n):
            sc, _, _ = needleman_wunsch(seqs[i].residues, seqs[j].residues, matrix, gap_penalty)
            sums[i] += sc
            sums[j] += sc
    center = max(range(n), key=lambda i: (sums[i], -i))

    master = seqs[center].residues
    done: list[tuple[str, str]] = [(seqs[center].id, master)]
    for j in range(n):
        if j == center:
            continue
        _, c_aln, s_aln = needleman_wunsch(
            seqs[center].residues, seqs[j].residues, matrix, gap_penalty
        )
        # Merge c_aln's columns into the running master; both degap to the
        # center sequence, so walk them in lockstep.
        take_master: list[int | None] = []
        take_new: list[int | None] = []
        mi = ci = 0
        while mi < len(master) or ci < len(c_aln):
            if mi < len(master) and master[mi] == GAP:
                take_master.append(mi)
                take_new.append(None)
                mi += 1
            elif ci < len(c_aln) and c_aln[ci] == GAP:
                take_master.append(None)
                take_new.append(ci)
                ci += 1
            else:
                take_master.append(mi)
                take_new.append(ci)
                mi += 1
                ci += 1
        master = "".join(master[k] if k is not None else GAP for k in take_master)
        done = [
            (sid, "".join(row[k] if k is not None else GAP for k in take_master))
            for sid, row in done
        ]
        done.append(
            (seqs[j].id, "".join(s_aln[k] if k is not None else GAP for k in take_new))
        )

    by_id = dict(done)
    rows = tuple(by_id[s.id] for s in seqs)
    return normalize_alignment(
        AlignedMatrix(tuple(s.id for s in seqs), rows),
        {s.id: s.residues for s in seqs},
    )


def seed_population(
    seqs: Sequence[RawSequence],
    count: int,
    rng: random.Random,
    matrix: SubstitutionMatrix | None = None,
) -> list[AlignedMatrix]:
    """Base center-star alignment plus increasingly perturbed variants.

    Variant i carries i cumulative gap-shift mutations; variant 0 is the
    base alignment itself.
    """
    if count < 1:
        raise ConfigError(f"seed count must be >= 1, got {count}")
    base = center_star_alignment(seqs, matrix)
    out = [base]
    current = base
    for _ in range(count - 1):
        current = shift_closed_gaps(current, rng)
        out.append(current)
    return out


# ---------------------------------------------------------------------------
# Problem adapter for the engine.
# ---------------------------------------------------------------------------


@dataclass
class MsaProblem:
    """Alignment domain packaged behind the engine's problem contract.

    Scores are maximization-oriented as defined above; ``evaluate`` negates
    them so the engine minimizes. The optional fifth objective plugs in the
    parsimony proxy and therefore needs at least 3 sequences.
    """

    sequences: list[RawSequence]
    objectives: tuple[str, ...] = ("simg", "simng", "sop", "gap")
    matrix: SubstitutionMatrix = field(default_factory=blosum62)

    def __post_init__(self) -> None:
        if len(self.sequences) < 2:
            raise ConfigError("alignment problems need at least 2 sequences")
        if len({s.id for s in self.sequences}) != len(self.sequences):
            raise DataError("duplicate sequence ids")
        if len(self.objectives) < 2:
            raise ConfigError("select at least 2 objectives")
        unknown = [n for n in self.objectives if n not in OBJECTIVE_NAMES]
        if unknown:
            raise ConfigError(
                f"unknown objective(s) {unknown}; valid names: {', '.join(OBJECTIVE_NAMES)}"
            )
        if len(set(self.objectives)) != len(self.objectives):
            raise ConfigError("objective names must be unique")
        if "parsimony" in self.objectives and len(self.sequences) < 3:
            raise ConfigError("the parsimony objective needs at least 3 sequences")

    def objective_count(self) -> int:
        return len(self.objectives)

    def maximization_scores(self, aln: AlignedMatrix) -> dict[str, float]:
        values: dict[str, float] = {}
        for name in self.objectives:
            if name == "simg":
                values[name] = simg(aln)
            elif name == "simng":
                values[name] = simng(aln)
            elif name == "sop":
                values[name] = sop(aln, self.matrix)
            elif name == "gap":
                values[name] = gap_objective(aln)
            else:
                values[name] = parsimony_proxy(aln)
        return values

    def evaluate(self, aln: AlignedMatrix) -> tuple[float, ...]:
        scores = self.maximization_scores(aln)
        return tuple(-scores[name] for name in self.objectives)

    def crossover(self, a: AlignedMatrix, b: AlignedMatrix, rng: random.Random) -> AlignedMatrix:
        return single_point_crossover(a, b, rng)

    def mutate(self, aln: AlignedMatrix, rng: random.Random) -> AlignedMatrix:
        return shift_closed_gaps(aln, rng)

    def seed(self, count: int, rng: random.Random) -> list[AlignedMatrix]:
        return seed_population(self.sequences, count, rng, self.matrix)
