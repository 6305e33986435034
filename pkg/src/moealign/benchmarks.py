"""Continuous benchmark problem and indicator used by the effort ablation."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from .errors import ConfigError


def _clamp01(v: float) -> float:
    return 0.0 if v < 0.0 else 1.0 if v > 1.0 else v


@dataclass(frozen=True)
class Zdt1Problem:
    """Two-objective ZDT1 test function over [0, 1]^n.

    f1 = x1, g = 1 + 9 * mean(x2..xn), f2 = g * (1 - sqrt(f1 / g)).
    Out-of-range genotypes are clamped at evaluation time, never rejected.
    Crossover is a per-gene uniform blend; mutation perturbs one uniformly
    chosen gene with bounded Gaussian noise.
    """

    n_vars: int
    mutation_sigma: float = 0.1

    def __post_init__(self) -> None:
        if self.n_vars < 2:
            raise ConfigError(f"zdt1 needs n_vars >= 2, got {self.n_vars}")

    def objective_count(self) -> int:
        return 2

    def evaluate(self, genotype: Sequence[float]) -> tuple[float, float]:
        x = [_clamp01(v) for v in genotype]
        f1 = x[0]
        g = 1.0 + 9.0 * (sum(x[1:]) / (len(x) - 1))
        f2 = g * (1.0 - math.sqrt(f1 / g))
        return (f1, f2)

    def crossover(self, a: Sequence[float], b: Sequence[float], rng: random.Random):
        return tuple(ai + rng.random() * (bi - ai) for ai, bi in zip(a, b))

    def mutate(self, genotype: Sequence[float], rng: random.Random):
        idx = rng.randrange(len(genotype))
        out = list(genotype)
        out[idx] = _clamp01(out[idx] + rng.gauss(0.0, self.mutation_sigma))
        return tuple(out)

    def seed(self, count: int, rng: random.Random) -> list[tuple[float, ...]]:
        return [tuple(rng.random() for _ in range(self.n_vars)) for _ in range(count)]


def hypervolume_2d(points: Sequence[Sequence[float]], ref: Sequence[float]) -> float:
    """Area dominated by a 2-D point set and bounded by a reference point.

    Points at or beyond the reference contribute nothing. Computed by a
    sweep over the non-dominated staircase sorted by the first objective.
    """
    rx, ry = float(ref[0]), float(ref[1])
    pts = sorted((float(p[0]), float(p[1])) for p in points if p[0] < rx and p[1] < ry)
    staircase: list[tuple[float, float]] = []
    for x, y in pts:
        if not staircase or y < staircase[-1][1]:
            staircase.append((x, y))
    hv = 0.0
    for i, (x, y) in enumerate(staircase):
        x_next = staircase[i + 1][0] if i + 1 < len(staircase) else rx
        hv += (x_next - x) * (ry - y)
    return hv
