import numpy as np
import pytest

from qdcomp import (
    CentroidSet,
    Population,
    arm_task,
    learned_maze_task,
    make_metric_grid,
    project_and_score,
)
from oracles import projection_oracle


def population_of(fitness, descriptors):
    fitness = np.asarray(fitness, dtype=float)
    descriptors = np.asarray(descriptors, dtype=float)
    return Population(
        genomes=np.zeros((len(fitness), 1)),
        fitness=fitness,
        descriptors=descriptors,
        competition_fitness=np.zeros(len(fitness)),
    )


def grid_of(points):
    return CentroidSet(points=np.asarray(points, dtype=float), provenance="random")


class TestProjectAndScore:
    def test_empty_population(self):
        pop = population_of([], np.empty((0, 1)))
        qd, coverage, best = project_and_score(pop, grid_of([[0.0], [1.0]]), 0.0)
        assert qd == 0.0 and coverage == 0.0
        assert np.isnan(best)

    def test_two_distinct_cells(self):
        pop = population_of([1.0, 2.0], [[0.1], [9.9]])
        grid = grid_of([[0.0], [10.0], [20.0], [30.0]])
        qd, coverage, best = project_and_score(pop, grid, 0.0)
        assert qd == 3.0
        assert coverage == 0.5
        assert best == 2.0

    def test_same_cell_keeps_elite_only(self):
        pop = population_of([1.0, 2.0], [[0.1], [0.2]])
        qd, coverage, _ = project_and_score(pop, grid_of([[0.0], [10.0]]), 5.0)
        assert qd == 7.0
        assert coverage == 0.5

    def test_negative_addend_rejected(self):
        pop = population_of([-1.0], [[0.0]])
        with pytest.raises(ValueError, match="offset"):
            project_and_score(pop, grid_of([[0.0]]), 0.5)

    def test_dimension_mismatch(self):
        pop = population_of([1.0], [[0.0, 0.0]])
        with pytest.raises(ValueError, match="grid dim"):
            project_and_score(pop, grid_of([[0.0]]), 0.0)

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(1, 60))
            m = int(rng.integers(1, 20))
            dim = int(rng.integers(1, 4))
            fitness = rng.normal(size=n)
            descriptors = rng.normal(size=(n, dim))
            points = rng.normal(size=(m, dim))
            offset = float(-fitness.min() + rng.uniform(0, 2))
            got = project_and_score(population_of(fitness, descriptors), grid_of(points), offset)
            want = projection_oracle(fitness, descriptors, points, offset)
            assert got == want

    def test_new_cell_strictly_improves_both_scores(self):
        rng = np.random.default_rng(1)
        grid = grid_of(rng.uniform(size=(16, 2)))
        fitness = rng.normal(size=10)
        descriptors = rng.uniform(size=(10, 2))
        offset = float(-fitness.min() + 1.0)
        qd, coverage, _ = project_and_score(population_of(fitness, descriptors), grid, offset)
        # drop a new individual exactly onto an unoccupied centroid
        from qdcomp import pairwise_distances

        occupied = set(pairwise_distances(descriptors, grid.points).argmin(axis=1).tolist())
        empty = next(c for c in range(16) if c not in occupied)
        fitness2 = np.append(fitness, 0.0)
        descriptors2 = np.vstack([descriptors, grid.points[empty]])
        qd2, coverage2, _ = project_and_score(
            population_of(fitness2, descriptors2), grid, offset
        )
        assert qd2 > qd
        assert coverage2 > coverage

    def test_coverage_bounded_by_population(self):
        rng = np.random.default_rng(2)
        grid = grid_of(rng.uniform(size=(32, 2)))
        for n in (1, 3, 11):
            fitness = rng.normal(size=n)
            descriptors = rng.uniform(size=(n, 2))
            _, coverage, _ = project_and_score(
                population_of(fitness, descriptors), grid, float(-fitness.min())
            )
            assert coverage <= min(n, 32) / 32


class TestMakeMetricGrid:
    def test_bounded_task_deterministic(self):
        task = arm_task(4)
        a = make_metric_grid(task, 12, seed=3)
        b = make_metric_grid(task, 12, seed=3)
        assert np.array_equal(a.points, b.points)
        assert a.points.shape == (12, 2)
        assert a.points.min() >= 0.0 and a.points.max() <= 1.0

    def test_single_cell_coverage_binary(self):
        task = arm_task(4)
        grid = make_metric_grid(task, 1, seed=0)
        pop = population_of([0.0, -1.0], [[0.2, 0.2], [0.8, 0.8]])
        _, coverage, _ = project_and_score(pop, grid, 10.0)
        assert coverage == 1.0

    def test_unbounded_task_uses_sample_bbox(self):
        task = learned_maze_task(n_raw_samples=4, n_components=2)
        sample = np.array([[0.0, 0.0], [2.0, 1.0], [1.0, 2.0]])
        grid = make_metric_grid(task, 20, seed=1, population_sample=sample)
        assert grid.provenance == "data-driven"
        assert np.all(grid.points >= sample.min(axis=0))
        assert np.all(grid.points <= sample.max(axis=0))

    def test_unbounded_task_without_sample_rejected(self):
        task = learned_maze_task(n_raw_samples=4, n_components=2)
        with pytest.raises(ValueError, match="population sample"):
            make_metric_grid(task, 20, seed=1)
