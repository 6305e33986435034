"""Decomposition-based multi-objective sequence alignment toolkit.

The engine decomposes an m-objective problem into scalar subproblems with
weighted Chebyshev scalarization and reallocates per-generation search
effort toward subproblems with high offspring fitness variance. The
packaged problem domain is multiple sequence alignment with four column
scores, plus distance-tree estimation and split-based tree accuracy.
"""

from .benchmarks import Zdt1Problem, hypervolume_2d
from .engine import (
    Individual,
    Problem,
    RunConfig,
    RunResult,
    Subproblem,
    allocate_effort,
    build_neighborhoods,
    chebyshev,
    dominates,
    fitness_variance,
    floor_weights,
    pareto_filter,
    run,
    update_ideal,
)
from .errors import (
    ConfigError,
    ContractViolation,
    DataError,
    MoealignError,
    ParseError,
)
from .fileio import (
    as_alignment,
    generate_weights,
    parse_fasta,
    parse_manifest,
    parse_newick,
    parse_substitution_matrix,
    parse_weights,
    write_fasta,
    write_manifest,
    write_newick,
    write_weights,
)
from .msa import (
    AlignedMatrix,
    MsaProblem,
    RawSequence,
    SubstitutionMatrix,
    blosum62,
    center_star_alignment,
    gap_objective,
    normalize_alignment,
    seed_population,
    shift_closed_gaps,
    simg,
    simng,
    single_point_crossover,
    sop,
)
from .phylo import (
    DistanceMatrix,
    PhyloTree,
    bipartitions,
    fn_rate,
    neighbor_joining,
    pairwise_distance,
    parsimony_score,
)

__version__ = "0.1.0"
