import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moealign.benchmarks import Zdt1Problem, hypervolume_2d
from moealign.errors import ConfigError

from oracles import ie_hypervolume_2d


def test_zdt1_formula_values():
    problem = Zdt1Problem(5)
    # f2 = g * (1 - sqrt(f1 / g)); at the all-zero genotype g = 1, f2 = 1.
    assert problem.evaluate((0, 0, 0, 0, 0)) == (0.0, 1.0)
    assert problem.evaluate((1, 0, 0, 0, 0)) == (1.0, 0.0)
    f1, f2 = problem.evaluate((0.25, 0, 0, 0, 0))
    assert f1 == 0.25
    assert f2 == pytest.approx(0.5, abs=1e-12)


def test_zdt1_clamps_out_of_bounds_genotypes():
    problem = Zdt1Problem(3)
    assert problem.evaluate((-2.0, 0.5, 1.7)) == problem.evaluate((0.0, 0.5, 1.0))


def test_zdt1_rejects_tiny_dimension():
    with pytest.raises(ConfigError):
        Zdt1Problem(1)


def test_zdt1_operators_stay_in_bounds():
    problem = Zdt1Problem(6)
    rng = random.Random(0)
    genotypes = problem.seed(20, rng)
    for _ in range(200):
        a, b = rng.sample(genotypes, 2)
        child = problem.mutate(problem.crossover(a, b, rng), rng)
        assert len(child) == 6
        assert all(0.0 <= v <= 1.0 for v in child)
        genotypes.append(child)


def test_hypervolume_worked_example():
    assert hypervolume_2d([(0, 1), (1, 0)], (1.1, 1.1)) == pytest.approx(0.21, abs=1e-12)


def test_hypervolume_ignores_points_beyond_reference():
    assert hypervolume_2d([(2.0, 2.0)], (1.1, 1.1)) == 0.0
    assert hypervolume_2d([], (1.1, 1.1)) == 0.0


@settings(max_examples=80)
@given(st.integers(0, 2**32 - 1), st.integers(1, 9))
def test_hypervolume_matches_inclusion_exclusion(seed, count):
    rng = random.Random(seed)
    points = [(rng.uniform(0, 1.5), rng.uniform(0, 1.5)) for _ in range(count)]
    ref = (1.2, 1.2)
    assert hypervolume_2d(points, ref) == pytest.approx(
        ie_hypervolume_2d(points, ref), rel=1e-9, abs=1e-12
    )


def test_hypervolume_monotone_in_added_points():
    rng = random.Random(3)
    ref = (1.1, 1.1)
    points = []
    prev = 0.0
    for _ in range(30):
        points.append((rng.random(), rng.random()))
        cur = hypervolume_2d(points, ref)
        assert cur >= prev - 1e-12
        prev = cur
