"""Decomposition-based multi-objective optimizer with variance-adaptive effort.

An m-objective problem is split into N scalar subproblems via weighted
Chebyshev scalarization. Subproblems whose weight vectors are close
collaborate: mating parents come from the neighborhood and a good offspring
may replace neighboring incumbents. On top of the classic loop, the
per-generation offspring budget is reallocated every generation in
proportion to the fitness variance each subproblem exhibited, so
subproblems sitting in dispersed regions of the landscape get to explore
more while the total evaluation cost per generation stays constant.

All state mutation happens in a fixed serial order (ascending subproblem
index, then ascending offspring index), so a run with a fixed seed is
bit-reproducible and parallel offspring evaluation cannot change results.
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol, Sequence

from .errors import ConfigError, ContractViolation, ParseError

WEIGHT_EPS = 1e-6

Objectives = tuple[float, ...]
Evaluator = Callable[[list], list[Objectives]]


class Problem(Protocol):
    """Capability set the engine requires from a problem domain.

    ``evaluate`` must be deterministic for a fixed genotype, and operator
    outputs must be valid genotypes under the problem's own rules.
    """

    def objective_count(self) -> int: ...

    def evaluate(self, genotype: Any) -> Sequence[float]: ...

    def crossover(self, a: Any, b: Any, rng: random.Random) -> Any: ...

    def mutate(self, genotype: Any, rng: random.Random) -> Any: ...

    def seed(self, count: int, rng: random.Random) -> list: ...


@dataclass(frozen=True)
class Individual:
    genotype: Any
    objectives: Objectives


@dataclass
class Subproblem:
    index: int
    weight: tuple[float, ...]
    incumbent: Individual
    neighbors: tuple[int, ...]
    fitness_samples: list[float] = field(default_factory=list)
    effort: int = 1


@dataclass
class RunConfig:
    """Hyperparameters, budgets and seeds for one optimizer run.

    ``per_generation_budget`` is the total offspring count per generation,
    shared by all subproblems; it must be at least N * effort_floor.
    ``replacement_cap`` bounds how many neighbor incumbents one offspring
    may replace (None means unbounded). ``adaptive_effort=False`` degrades
    to the classic equal-effort loop, which is the ablation baseline.
    """

    generations: int
    neighborhood_k: int
    per_generation_budget: int
    replacement_cap: int | None = 2
    rng_seed: int = 0
    effort_floor: int = 1
    adaptive_effort: bool = True

    def validate(self, n_subproblems: int) -> None:
        if self.generations < 0:
            raise ConfigError(f"generations must be >= 0, got {self.generations}")
        if not 2 <= self.neighborhood_k <= n_subproblems:
            raise ConfigError(
                f"neighborhood_k must be in [2, {n_subproblems}], got {self.neighborhood_k}"
            )
        if self.effort_floor < 1:
            raise ConfigError(f"effort_floor must be >= 1, got {self.effort_floor}")
        if self.per_generation_budget < n_subproblems * self.effort_floor:
            raise ConfigError(
                f"per_generation_budget {self.per_generation_budget} is below "
                f"{n_subproblems} subproblems * effort_floor {self.effort_floor}"
            )
        if self.replacement_cap is not None and self.replacement_cap < 1:
            raise ConfigError("replacement_cap must be >= 1 or None for unbounded")


@dataclass
class EngineState:
    subproblems: list[Subproblem]
    ideal: Objectives
    config: RunConfig
    generation: int = 0

    @property
    def objective_count(self) -> int:
        return len(self.ideal)


@dataclass(frozen=True)
class GenerationRecord:
    """Per-generation snapshot used for diagnostics and trajectory checks."""

    generation: int
    ideal: Objectives
    objectives: tuple[Objectives, ...]
    scalars: tuple[float, ...]
    efforts: tuple[int, ...]


@dataclass
class RunResult:
    incumbents: list[Individual]
    pareto: list[Individual]
    history: list[GenerationRecord]
    state: EngineState


def floor_weights(weights: Sequence[float], eps: float = WEIGHT_EPS) -> tuple[float, ...]:
    """Project a weight vector onto the simplex slice with all entries >= eps.

    Entries below eps are pinned at eps and the remaining mass is scaled
    over the free entries; pinning repeats until stable. This guards the
    Chebyshev scalarization against weakly dominated attractors at zero
    weights while keeping the vector summing to one.
    """
    m = len(weights)
    if m < 2:
        raise ContractViolation(f"weight vector needs >= 2 entries, got {m}")
    if m * eps >= 1.0:
        raise ConfigError(f"epsilon {eps} too large for {m} objectives")
    if any(not math.isfinite(w) or w < 0.0 for w in weights):
        raise ContractViolation(f"weights must be finite and non-negative: {weights!r}")
    if sum(weights) <= 0.0:
        raise ContractViolation("weight vector must have positive mass")
    pinned = [False] * m
    while True:
        free_mass = 1.0 - eps * sum(pinned)
        free_total = sum(w for w, p in zip(weights, pinned) if not p)
        scale = free_mass / free_total
        changed = False
        for i, (w, p) in enumerate(zip(weights, pinned)):
            if not p and w * scale < eps:
                pinned[i] = True
                changed = True
        if not changed:
            return tuple(eps if p else w * scale for w, p in zip(weights, pinned))


def chebyshev(objectives: Sequence[float], weight: Sequence[float], ideal: Sequence[float]) -> float:
    """Weighted Chebyshev scalarization: max_i weight_i * |f_i - ideal_i|.

    The weight vector is expected to be epsilon-floored already.
    """
    if not (len(objectives) == len(weight) == len(ideal)):
        raise ContractViolation(
            f"dimension mismatch: objectives {len(objectives)}, "
            f"weight {len(weight)}, ideal {len(ideal)}"
        )
    return max(w * abs(f - z) for f, w, z in zip(objectives, weight, ideal))


def update_ideal(ideal: Sequence[float], observed: Sequence[float]) -> Objectives:
    """Componentwise minimum of the running ideal point and a new vector."""
    if len(ideal) != len(observed):
        raise ContractViolation(
            f"dimension mismatch: ideal {len(ideal)}, observed {len(observed)}"
        )
    return tuple(min(z, f) for z, f in zip(ideal, observed))


def fitness_variance(samples: Sequence[float]) -> float:
    """Population variance of a sample list; 0.0 for empty or singleton input."""
    if len(samples) < 2:
        return 0.0
    return float(statistics.pvariance(samples))


def build_neighborhoods(weights: Sequence[Sequence[float]], k: int) -> list[list[int]]:
    """For each weight vector, the k nearest by Euclidean distance (self included).

    Ties are broken by lower index, and each list is sorted by (distance, index).
    """
    n = len(weights)
    if not 2 <= k <= n:
        raise ConfigError(f"neighborhood size k must be in [2, {n}], got {k}")
    out = []
    for wi in weights:
        order = sorted(range(n), key=lambda j: (math.dist(wi, weights[j]), j))
        out.append(order[:k])
    return out


def allocate_effort(variances: Sequence[float], budget: int, floor: int = 1) -> list[int]:
    """Split an integer offspring budget across subproblems by variance share.

    The whole budget is divided in proportion to the variances, subject to a
    per-subproblem floor: any subproblem whose proportional quota falls below
    the floor is pinned at the floor and the remaining budget is re-shared
    among the rest (repeated until stable). Fractional quotas are rounded by
    the largest-remainder rule, ties going to the lower index. All-zero
    variances produce an as-equal-as-possible split. The result always sums
    to the budget exactly and is non-decreasing in variance rank.
    """
    n = len(variances)
    if n == 0:
        raise ConfigError("cannot allocate effort over zero subproblems")
    if floor < 1:
        raise ConfigError(f"effort floor must be >= 1, got {floor}")
    if any(not math.isfinite(v) or v < 0.0 for v in variances):
        raise ContractViolation(f"variances must be finite and >= 0: {variances!r}")
    if budget < n * floor:
        raise ConfigError(f"budget {budget} below {n} subproblems * floor {floor}")

    active = list(range(n))
    remaining = budget
    quotas: dict[int, float] = {}
    while True:
        total = sum(variances[i] for i in active)
        if total > 0.0:
            quotas = {i: remaining * variances[i] / total for i in active}
        else:
            share = remaining / len(active)
            quotas = {i: share for i in active}
        low = [i for i in active if quotas[i] < floor]
        if not low:
            break
        remaining -= floor * len(low)
        active = [i for i in active if i not in low]
        # Cannot empty out: the remaining quotas average >= floor.

    alloc = [floor] * n
    base = {i: int(quotas[i]) for i in active}
    leftover = remaining - sum(base.values())
    by_remainder = sorted(active, key=lambda i: (-(quotas[i] - base[i]), i))
    bumped = set(by_remainder[:leftover])
    for i in active:
        alloc[i] = base[i] + (1 if i in bumped else 0)
    return alloc


def _checked_objectives(values: Sequence[float], m: int) -> Objectives:
    t = tuple(float(v) for v in values)
    if len(t) != m:
        raise ContractViolation(f"problem returned {len(t)} objectives, expected {m}")
    if not all(math.isfinite(v) for v in t):
        raise ContractViolation(f"objective vector contains non-finite values: {t!r}")
    return t


def initialize_state(
    config: RunConfig,
    problem: Problem,
    weights: Sequence[Sequence[float]],
    seeds: Sequence[Any],
    evaluator: Evaluator | None = None,
) -> EngineState:
    """Evaluate seeds, floor weights, build neighborhoods and the ideal point."""
    m = problem.objective_count()
    if m < 2:
        raise ConfigError(f"need at least 2 objectives, got {m}")
    n = len(weights)
    if n < 2:
        raise ConfigError(f"need at least 2 weight vectors, got {n}")
    if len(seeds) != n:
        raise ConfigError(f"got {len(seeds)} seeds for {n} weight vectors")
    config.validate(n)

    floored = []
    for w in weights:
        if len(w) != m:
            raise ConfigError(f"weight vector {tuple(w)!r} has dimension {len(w)}, expected {m}")
        floored.append(floor_weights(w))
    if len(set(floored)) != n:
        raise ConfigError("weight vectors must be pairwise distinct")

    neighborhoods = build_neighborhoods(floored, config.neighborhood_k)
    seed_list = list(seeds)
    if evaluator is not None:
        objective_rows = evaluator(seed_list)
    else:
        objective_rows = [problem.evaluate(g) for g in seed_list]
    evaluated = [
        Individual(g, _checked_objectives(objs, m))
        for g, objs in zip(seed_list, objective_rows)
    ]

    ideal = evaluated[0].objectives
    for ind in evaluated[1:]:
        ideal = update_ideal(ideal, ind.objectives)

    efforts = allocate_effort([0.0] * n, config.per_generation_budget, config.effort_floor)
    subproblems = [
        Subproblem(
            index=i,
            weight=floored[i],
            incumbent=evaluated[i],
            neighbors=tuple(neighborhoods[i]),
            fitness_samples=[],
            effort=efforts[i],
        )
        for i in range(n)
    ]
    return EngineState(subproblems=subproblems, ideal=ideal, config=config)


def generation_step(
    state: EngineState,
    problem: Problem,
    rng: random.Random,
    evaluator: Evaluator | None = None,
) -> None:
    """Run one generation: produce, evaluate and merge offspring, then re-budget.

    Offspring genotypes are produced first, from the incumbents as they stood
    at the start of the generation. Evaluation is a pure step (and the one
    place an external evaluator may parallelize). The merge then applies, in
    ascending (subproblem, offspring) order: ideal-point update, fitness
    sample collection under the home weight vector, and replacement of up to
    replacement_cap neighbor incumbents that the offspring strictly improves,
    scanning neighbors in ascending index order. Finally the per-subproblem
    effort for the next generation is reallocated from the collected fitness
    variances (or reset to an equal split when adaptive effort is off).
    """
    subs = state.subproblems
    cap = state.config.replacement_cap
    m = state.objective_count

    for sp in subs:
        sp.fitness_samples = []

    start_genotypes = [sp.incumbent.genotype for sp in subs]
    plan: list[tuple[int, Any]] = []
    for sp in subs:
        neigh = sp.neighbors
        first = start_genotypes[neigh[0]]
        degenerate = all(start_genotypes[j] == first for j in neigh[1:])
        for _ in range(sp.effort):
            ia, ib = rng.sample(neigh, 2)
            parent_a = start_genotypes[ia]
            parent_b = start_genotypes[ib]
            if degenerate:
                # Only one distinct genotype in the neighborhood: mate with
                # a mutated copy instead of a clone.
                parent_b = problem.mutate(parent_a, rng)
            child = problem.mutate(problem.crossover(parent_a, parent_b, rng), rng)
            plan.append((sp.index, child))

    genotypes = [g for _, g in plan]
    if evaluator is not None:
        objective_rows = evaluator(genotypes)
    else:
        objective_rows = [problem.evaluate(g) for g in genotypes]
    if len(objective_rows) != len(genotypes):
        raise ContractViolation("evaluator returned a different number of results")

    for (home_idx, genotype), raw_objs in zip(plan, objective_rows):
        objs = _checked_objectives(raw_objs, m)
        state.ideal = update_ideal(state.ideal, objs)
        home = subs[home_idx]
        home.fitness_samples.append(chebyshev(objs, home.weight, state.ideal))
        child = Individual(genotype, objs)
        replaced = 0
        for j in sorted(home.neighbors):
            if cap is not None and replaced >= cap:
                break
            nb = subs[j]
            if chebyshev(objs, nb.weight, state.ideal) < chebyshev(
                nb.incumbent.objectives, nb.weight, state.ideal
            ):
                nb.incumbent = child
                replaced += 1

    if state.config.adaptive_effort:
        variances = [fitness_variance(sp.fitness_samples) for sp in subs]
    else:
        variances = [0.0] * len(subs)
    efforts = allocate_effort(
        variances, state.config.per_generation_budget, state.config.effort_floor
    )
    for sp, e in zip(subs, efforts):
        sp.effort = e
    state.generation += 1


def _snapshot(state: EngineState) -> GenerationRecord:
    return GenerationRecord(
        generation=state.generation,
        ideal=state.ideal,
        objectives=tuple(sp.incumbent.objectives for sp in state.subproblems),
        scalars=tuple(
            chebyshev(sp.incumbent.objectives, sp.weight, state.ideal)
            for sp in state.subproblems
        ),
        efforts=tuple(sp.effort for sp in state.subproblems),
    )


def run(
    config: RunConfig,
    problem: Problem,
    weights: Sequence[Sequence[float]],
    seeds: Sequence[Any],
    evaluator: Evaluator | None = None,
    on_generation: Callable[[EngineState], None] | None = None,
) -> RunResult:
    """Run the full optimizer loop and return incumbents plus the Pareto set.

    ``seeds`` must contain exactly one genotype per weight vector. The run
    executes exactly ``config.generations`` generation steps; ``history``
    holds one snapshot per generation boundary, starting with the evaluated
    seed population.
    """
    rng = random.Random(config.rng_seed)
    state = initialize_state(config, problem, weights, seeds, evaluator)
    history = [_snapshot(state)]
    if on_generation is not None:
        on_generation(state)
    for _ in range(config.generations):
        generation_step(state, problem, rng, evaluator)
        history.append(_snapshot(state))
        if on_generation is not None:
            on_generation(state)
    incumbents = [sp.incumbent for sp in state.subproblems]
    return RunResult(
        incumbents=incumbents,
        pareto=pareto_filter(incumbents),
        history=history,
        state=state,
    )


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Minimization dominance: a is no worse everywhere and better somewhere."""
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def pareto_filter(individuals: Sequence[Individual]) -> list[Individual]:
    """Individuals not dominated by any other input individual.

    Implemented as an incremental archive (insert, evict dominated members)
    rather than an all-pairs scan; duplicates in objective space are all
    retained, and input order is preserved.
    """
    if not individuals:
        return []
    m = len(individuals[0].objectives)
    for ind in individuals:
        if len(ind.objectives) != m:
            raise ContractViolation("objective vectors differ in dimension")
    archive: list[int] = []
    for i, ind in enumerate(individuals):
        f = ind.objectives
        survivors = []
        dominated = False
        for j in archive:
            g = individuals[j].objectives
            if dominates(g, f):
                dominated = True
                break
            if not dominates(f, g):
                survivors.append(j)
        if dominated:
            continue
        archive = survivors + [i]
    keep = set(archive)
    return [ind for i, ind in enumerate(individuals) if i in keep]


def dump_snapshot(state: EngineState) -> str:
    """Line-oriented engine snapshot: index, weights, effort, incumbent objectives."""
    lines = ["# subproblem snapshot: index\tweights\teffort\tobjectives"]
    for sp in state.subproblems:
        lines.append(
            "\t".join(
                (
                    str(sp.index),
                    ",".join(repr(w) for w in sp.weight),
                    str(sp.effort),
                    ",".join(repr(v) for v in sp.incumbent.objectives),
                )
            )
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SnapshotRecord:
    index: int
    weight: tuple[float, ...]
    effort: int
    objectives: Objectives


def parse_snapshot(text: str) -> list[SnapshotRecord]:
    """Parse the format written by :func:`dump_snapshot`."""
    records = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(f"expected 4 tab-separated fields, got {len(parts)}", line=line_no)
        try:
            index = int(parts[0])
            weight = tuple(float(x) for x in parts[1].split(","))
            effort = int(parts[2])
            objectives = tuple(float(x) for x in parts[3].split(","))
        except ValueError as exc:
            raise ParseError(f"bad snapshot field: {exc}", line=line_no) from None
        if effort < 1:
            raise ParseError(f"effort must be >= 1, got {effort}", line=line_no)
        records.append(SnapshotRecord(index, weight, effort, objectives))
    if not records:
        raise ParseError("snapshot contains no records", line=1)
    return records
