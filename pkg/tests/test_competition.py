import numpy as np
import pytest
from sklearn.base import clone

from qdcomp import (
    ClusterElites,
    ClusterElitesState,
    DominatedNovelty,
    GlobalCompetition,
    MapElitesCompetition,
    ThresholdElites,
    arm_task,
    cluster_elites_competition,
    dns_competition,
    learned_maze_task,
    me_competition,
    te_competition,
)
from oracles import dns_oracle, me_oracle, te_oracle


def random_population(rng, max_n=60, max_dim=4):
    n = int(rng.integers(1, max_n))
    dim = int(rng.integers(1, max_dim + 1))
    fitness = rng.normal(size=n)
    if n > 1 and rng.random() < 0.4:
        # inject fitness ties to exercise the strict-inequality rule
        dupes = rng.integers(0, n, size=max(1, n // 4))
        fitness[dupes] = fitness[int(rng.integers(n))]
    descriptors = rng.normal(size=(n, dim))
    if n > 1 and rng.random() < 0.3:
        descriptors[int(rng.integers(n))] = descriptors[int(rng.integers(n))]
    return fitness, descriptors


class TestDominatedNoveltySearch:
    def test_single_individual_is_preserved(self):
        assert dns_competition([5.0], [[0.0, 0.0]], k=3).tolist() == [np.inf]

    def test_hand_example(self):
        got = dns_competition([3.0, 2.0, 1.0], [[0.0], [1.0], [3.0]], k=2)
        assert got.tolist() == [np.inf, 1.0, 2.5]

    def test_equal_fitness_is_not_superior(self):
        got = dns_competition([1.0, 1.0], [[0.0], [9.0]], k=1)
        assert got.tolist() == [np.inf, np.inf]

    def test_matches_oracle_on_random_populations(self):
        rng = np.random.default_rng(0)
        for _ in range(60):
            fitness, descriptors = random_population(rng)
            k = int(rng.integers(1, 6))
            got = dns_competition(fitness, descriptors, k=k)
            want = dns_oracle(fitness, descriptors, k)
            assert np.array_equal(got, want)

    def test_monotone_transform_invariance(self):
        rng = np.random.default_rng(1)
        fitness, descriptors = rng.normal(size=30), rng.normal(size=(30, 3))
        base = dns_competition(fitness, descriptors, k=3)
        for transform in (lambda f: 2.0 * f + 1.0, np.exp, lambda f: f**3):
            rescored = dns_competition(transform(fitness), descriptors, k=3)
            assert np.array_equal(base, rescored)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(2)
        fitness, descriptors = rng.normal(size=25), rng.normal(size=(25, 2))
        base = dns_competition(fitness, descriptors, k=2)
        perm = rng.permutation(25)
        assert np.array_equal(
            dns_competition(fitness[perm], descriptors[perm], k=2), base[perm]
        )

    def test_infinite_set_is_exactly_the_argmax_set(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            fitness, descriptors = random_population(rng)
            got = dns_competition(fitness, descriptors, k=3)
            assert np.array_equal(np.isinf(got), fitness == fitness.max())

    def test_adding_a_fitter_individual_never_raises_scores(self):
        rng = np.random.default_rng(4)
        fitness = rng.normal(size=40)
        descriptors = rng.normal(size=(40, 3))
        k = 3
        base = dns_competition(fitness, descriptors, k=k)
        counts = (fitness[None, :] > fitness[:, None]).sum(axis=1)
        new_f = np.append(fitness, fitness.max() + 1.0)
        new_d = np.vstack([descriptors, rng.normal(size=3)])
        updated = dns_competition(new_f, new_d, k=k)[:40]
        saturated = counts >= k
        assert np.all(updated[saturated] <= base[saturated])

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            dns_competition([np.nan], [[0.0]], k=1)


class TestMapElitesCompetition:
    CENTROIDS = np.array([[0.0], [10.0]])

    def test_same_cell_keeps_the_fitter(self):
        got = me_competition([2.0, 1.0], [[0.1], [0.2]], self.CENTROIDS)
        assert got.tolist() == [2.0, -np.inf]

    def test_distinct_cells_keep_both(self):
        got = me_competition([2.0, 1.0], [[0.1], [9.9]], self.CENTROIDS)
        assert got.tolist() == [2.0, 1.0]

    def test_fitness_tie_goes_to_lower_index(self):
        got = me_competition([2.0, 2.0], [[0.1], [0.2]], self.CENTROIDS)
        assert got.tolist() == [2.0, -np.inf]

    def test_centroid_tie_goes_to_lower_centroid(self):
        got = me_competition([1.0], [[5.0]], self.CENTROIDS)
        assert got.tolist() == [1.0]

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            me_competition([1.0], [[0.1, 0.2]], self.CENTROIDS)

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            fitness, descriptors = random_population(rng)
            centroids = rng.normal(size=(int(rng.integers(1, 12)), descriptors.shape[1]))
            got = me_competition(fitness, descriptors, centroids)
            assert np.array_equal(got, me_oracle(fitness, descriptors, centroids))


class TestThresholdElitesCompetition:
    def test_separation_beyond_threshold(self):
        got = te_competition([1.0, 2.0], [[0.0], [5.0]], l=1.0, k_nov=1)
        assert got.tolist() == [1.0, 2.0]

    def test_collision_replacement(self):
        got = te_competition([1.0, 2.0], [[0.0], [0.5]], l=1.0, k_nov=1)
        assert got.tolist() == [-np.inf, 2.0]

    def test_collision_keeps_incumbent_on_worse_fitness(self):
        got = te_competition([2.0, 1.0], [[0.0], [0.5]], l=1.0, k_nov=1)
        assert got.tolist() == [2.0, -np.inf]

    def test_single_individual(self):
        assert te_competition([7.0], [[0.0]], l=0.5).tolist() == [7.0]

    def test_isolated_individuals_keep_fitness(self):
        rng = np.random.default_rng(6)
        descriptors = np.arange(10.0)[:, None] * 5.0
        fitness = rng.normal(size=10)
        got = te_competition(fitness, descriptors, l=1.0, k_nov=3)
        assert np.array_equal(got, fitness)

    def test_matches_oracle_on_random_populations(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            fitness, descriptors = random_population(rng)
            l = float(rng.uniform(0.05, 3.0))
            k_nov = int(rng.integers(1, 5))
            got = te_competition(fitness, descriptors, l=l, k_nov=k_nov)
            assert np.array_equal(got, te_oracle(fitness, descriptors, l, k_nov))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            te_competition([1.0, np.nan], [[0.0], [1.0]], l=1.0)


class TestClusterElitesCompetition:
    def test_single_centroid_degenerate(self):
        state = ClusterElitesState(n_centroids=1)
        scores, new_state = cluster_elites_competition(
            [1.0, 5.0, 3.0], [[0.0], [1.0], [2.0]], state
        )
        assert new_state.centroid_indices.tolist() == [0]
        assert scores[0] == np.inf
        # one cell: only the fitter competitor survives
        assert scores.tolist() == [np.inf, 5.0, -np.inf]

    def test_collinear_endpoints_become_centroids(self):
        state = ClusterElitesState(n_centroids=2)
        _, new_state = cluster_elites_competition(
            [0.0, 0.0, 0.0], [[0.0], [5.0], [10.0]], state
        )
        assert sorted(new_state.centroid_indices.tolist()) == [0, 2]

    def test_population_of_centroid_size_all_infinite(self):
        state = ClusterElitesState(n_centroids=3)
        scores, _ = cluster_elites_competition(
            [1.0, 2.0, 3.0], [[0.0], [1.0], [2.0]], state
        )
        assert scores.tolist() == [np.inf] * 3

    def test_empty_population_rejected(self):
        with pytest.raises(ValueError):
            cluster_elites_competition([], np.empty((0, 1)), ClusterElitesState(1))


class TestEstimatorWrappers:
    def test_all_transforms_finite_or_signed_infinite(self):
        rng = np.random.default_rng(8)
        fitness, descriptors = rng.normal(size=20), rng.normal(size=(20, 2))
        centroids = rng.normal(size=(6, 2))
        transforms = [
            DominatedNovelty(k=2),
            MapElitesCompetition(centroids=centroids),
            ThresholdElites(l=0.5, k_nov=2),
            ClusterElites(n_centroids=4),
            GlobalCompetition(),
        ]
        for estimator in transforms:
            scores = estimator.transform(fitness, descriptors)
            assert not np.isnan(scores).any()

    def test_get_params_clone_roundtrip(self):
        estimator = DominatedNovelty(k=7)
        assert estimator.get_params() == {"k": 7}
        assert clone(estimator).k == 7
        te = ThresholdElites(l=0.25, k_nov=4)
        assert clone(te).get_params() == {"l": 0.25, "k_nov": 4}

    def test_global_competition_returns_raw_fitness(self):
        fitness = np.array([3.0, 1.0, 2.0])
        got = GlobalCompetition().transform(fitness, np.zeros((3, 2)))
        assert np.array_equal(got, fitness)

    def test_map_elites_binds_grid_from_task_bounds(self):
        task = arm_task(4)
        estimator = MapElitesCompetition(n_cells=32, grid_seed=1)
        estimator.bind_task(task)
        assert estimator.centroids_.points.shape == (32, 2)

    def test_map_elites_rejects_unbounded_task(self):
        task = learned_maze_task(n_raw_samples=4, n_components=2)
        with pytest.raises(ValueError, match="no descriptor bounds"):
            MapElitesCompetition().bind_task(task)

    def test_map_elites_requires_some_grid(self):
        with pytest.raises(ValueError, match="no grid"):
            MapElitesCompetition().transform([1.0], [[0.0]])

    def test_cluster_elites_state_resets_on_bind(self):
        estimator = ClusterElites(n_centroids=2)
        estimator.bind_task(arm_task(4))
        rng = np.random.default_rng(9)
        estimator.transform(rng.normal(size=5), rng.normal(size=(5, 2)))
        assert estimator.state_.centroid_indices is not None
        estimator.bind_task(arm_task(4))
        assert estimator.state_.centroid_indices is None
