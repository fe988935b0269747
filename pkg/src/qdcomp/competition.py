"""Local-competition fitness transforms.

A competition transform maps a population's raw fitness values and
descriptors to *competition fitness* scores used for truncation selection.
``+inf`` marks individuals that must survive, ``-inf`` marks individuals
eliminated by a niche rival, and finite scores rank everyone in between.

Four transforms are provided:

* :func:`dns_competition` scores each individual by its mean descriptor
  distance to the nearest strictly-fitter individuals, so survival requires
  either high fitness or behaviour unlike anything better.
* :func:`me_competition` keeps only the fittest individual per grid cell.
* :func:`te_competition` enforces a minimum descriptor distance between
  retained individuals, arbitrating collisions by fitness and novelty.
* :func:`cluster_elites_competition` splits the population into spread
  maximizing anchors and a locally competing remainder.

Each transform also has an estimator wrapper so it can be configured,
cloned and swapped like any scikit-learn component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from ._validation import (
    as_float_matrix,
    as_float_vector,
    check_consistent_length,
    check_finite,
    check_positive_float,
    check_positive_int,
)
from .geometry import CentroidSet, farthest_point_indices, pairwise_distances


def _validated_inputs(fitness, descriptors):
    fitness = as_float_vector(fitness, "fitness")
    descriptors = as_float_matrix(descriptors, "descriptors")
    check_consistent_length("fitness", fitness, "descriptors", descriptors)
    check_finite(fitness, "fitness")
    check_finite(descriptors, "descriptors")
    return fitness, descriptors


def dns_competition(fitness, descriptors, k=3) -> np.ndarray:
    """Score individuals by mean distance to their k nearest fitter rivals.

    For individual ``i``, the rival set holds every individual with strictly
    greater fitness. The competition fitness is the mean descriptor distance
    to the ``min(k, |rivals|)`` nearest rivals, or ``+inf`` when no rival
    exists (every fitness maximum survives selection unconditionally).

    The transform only depends on the fitness ordering, so any strictly
    increasing rescaling of the fitness values leaves the output unchanged.
    """
    fitness, descriptors = _validated_inputs(fitness, descriptors)
    k = check_positive_int(k, "k")
    n = len(fitness)
    out = np.full(n, np.inf)
    if n == 0:
        return out

    dist = pairwise_distances(descriptors, descriptors)
    fitter = fitness[None, :] > fitness[:, None]
    counts = fitter.sum(axis=1)

    # bulk path: rows with at least k rivals take the mean of the k smallest
    # distances, sorted ascending so summation order is deterministic
    full_rows = counts >= k
    if full_rows.any():
        masked = np.where(fitter[full_rows], dist[full_rows], np.inf)
        smallest = np.partition(masked, k - 1, axis=1)[:, :k]
        smallest.sort(axis=1)
        out[full_rows] = smallest.mean(axis=1)

    for i in np.flatnonzero((counts > 0) & ~full_rows):
        vals = np.sort(dist[i, fitter[i]])
        out[i] = vals.mean()
    return out


def me_competition(fitness, descriptors, centroids) -> np.ndarray:
    """Grid competition: the fittest individual per cell keeps its fitness.

    Individuals map to their nearest centroid (ties to the lower centroid
    index). Within each cell the maximum-fitness occupant keeps its raw
    fitness, ties resolved to the lowest individual index, and everyone else
    is eliminated with ``-inf``.
    """
    fitness, descriptors = _validated_inputs(fitness, descriptors)
    points = centroids.points if isinstance(centroids, CentroidSet) else as_float_matrix(
        centroids, "centroids"
    )
    if len(points) == 0:
        raise ValueError("centroids must be non-empty")
    n = len(fitness)
    out = np.full(n, -np.inf)
    if n == 0:
        return out
    cells = pairwise_distances(descriptors, points).argmin(axis=1)
    order = np.lexsort((np.arange(n), -fitness, cells))
    sorted_cells = cells[order]
    is_winner = np.ones(n, dtype=bool)
    is_winner[1:] = sorted_cells[1:] != sorted_cells[:-1]
    winners = order[is_winner]
    out[winners] = fitness[winners]
    return out


def te_competition(fitness, descriptors, l, k_nov=3) -> np.ndarray:
    """Distance-threshold competition over an unstructured population.

    Individuals are processed in index order. Each one looks up its nearest
    still-living predecessor; if that predecessor is farther than ``l`` (or
    absent) the individual keeps its raw fitness. Otherwise the two collide:
    the newcomer replaces the incumbent only when it is at least as good in
    both fitness and novelty (mean distance to its ``k_nov`` nearest living
    individuals) and strictly better in one, else the newcomer is eliminated.
    """
    fitness, descriptors = _validated_inputs(fitness, descriptors)
    l = check_positive_float(l, "l")
    k_nov = check_positive_int(k_nov, "k_nov")
    n = len(fitness)
    out = np.empty(n)
    if n == 0:
        return out
    dist = pairwise_distances(descriptors, descriptors)

    for i in range(n):
        alive = np.flatnonzero(out[:i] > -np.inf)
        if alive.size == 0:
            out[i] = fitness[i]
            continue
        d_alive = dist[i, alive]
        j = int(alive[np.lexsort((alive, d_alive))[0]])
        if dist[i, j] > l:
            out[i] = fitness[i]
            continue
        living = np.append(alive, i)
        nov_i = _mean_knn_distance(dist, i, living[living != i], k_nov)
        nov_j = _mean_knn_distance(dist, j, living[living != j], k_nov)
        weak = fitness[i] >= fitness[j] and nov_i >= nov_j
        strict = fitness[i] > fitness[j] or nov_i > nov_j
        if weak and strict:
            out[i] = fitness[i]
            out[j] = -np.inf
        else:
            out[i] = -np.inf
    return out


@dataclass(frozen=True)
class ClusterElitesState:
    """Snapshot of the diversity-anchor split used by cluster competition.

    ``n_centroids`` is the configured anchor count; the index arrays refer to
    rows of the population the state was computed from.
    """

    n_centroids: int
    centroid_indices: np.ndarray | None = None
    centroid_points: np.ndarray | None = None
    competitor_indices: np.ndarray | None = None


def cluster_elites_competition(fitness, descriptors, state, rng=None):
    """Split the population into spread anchors and a competing remainder.

    A centroid subpopulation of ``state.n_centroids`` individuals is chosen
    by greedy max-min (farthest point) selection over the descriptors and
    granted ``+inf`` so the diversity anchors always survive. Everyone else
    competes under :func:`me_competition` with the anchors' descriptors as
    the grid. Returns ``(competition_fitness, updated_state)``.

    The update is deterministic; ``rng`` is accepted for interface
    compatibility and unused.
    """
    fitness, descriptors = _validated_inputs(fitness, descriptors)
    if len(fitness) == 0:
        raise ValueError("cluster competition needs a non-empty population")
    m = check_positive_int(state.n_centroids, "n_centroids")
    anchors = farthest_point_indices(descriptors, m)

    n = len(fitness)
    out = np.full(n, -np.inf)
    out[anchors] = np.inf
    rest = np.setdiff1d(np.arange(n), anchors)
    if rest.size:
        out[rest] = me_competition(
            fitness[rest], descriptors[rest], descriptors[anchors]
        )
    new_state = ClusterElitesState(
        n_centroids=state.n_centroids,
        centroid_indices=anchors,
        centroid_points=descriptors[anchors].copy(),
        competitor_indices=rest,
    )
    return out, new_state


def _mean_knn_distance(dist, idx, others, k):
    vals = np.sort(dist[idx, others])
    return float(np.mean(vals[: min(k, len(vals))]))


class CompetitionFunction(BaseEstimator):
    """Base class for competition transforms.

    Subclasses implement :meth:`transform`, mapping ``(fitness,
    descriptors)`` to a competition fitness vector. :meth:`bind_task` is
    called once per search run and lets a transform derive anything it needs
    from the task (grid bounds, fresh state); the default is a no-op.
    """

    def bind_task(self, task) -> None:
        pass

    def transform(self, fitness, descriptors) -> np.ndarray:
        raise NotImplementedError


class DominatedNovelty(CompetitionFunction):
    """Competition through distance to nearer, fitter individuals.

    Parameters
    ----------
    k : int, default 3
        How many nearest fitter individuals are averaged; small values make
        competition more local.
    """

    def __init__(self, k=3):
        self.k = k

    def transform(self, fitness, descriptors):
        return dns_competition(fitness, descriptors, k=self.k)


class MapElitesCompetition(CompetitionFunction):
    """Grid-cell competition with one survivor per cell.

    Parameters
    ----------
    centroids : CentroidSet or array, optional
        The search grid. When omitted, a randomized grid of ``n_cells``
        centroids is drawn inside the task's descriptor bounds at
        :meth:`bind_task` time (tasks without bounds are rejected).
    n_cells : int, default 1024
    grid_seed : int, default 0
    """

    def __init__(self, centroids=None, n_cells=1024, grid_seed=0):
        self.centroids = centroids
        self.n_cells = n_cells
        self.grid_seed = grid_seed

    def bind_task(self, task):
        from .geometry import random_centroids

        if self.centroids is not None:
            self.centroids_ = self.centroids
            return
        if task.descriptor_bounds is None:
            raise ValueError(
                f"task {task.name!r} has no descriptor bounds; "
                "grid competition requires a predefined grid"
            )
        self.centroids_ = random_centroids(
            self.n_cells, task.descriptor_bounds, self.grid_seed
        )

    def transform(self, fitness, descriptors):
        centroids = getattr(self, "centroids_", self.centroids)
        if centroids is None:
            raise ValueError("no grid available: call bind_task or pass centroids")
        return me_competition(fitness, descriptors, centroids)


class ThresholdElites(CompetitionFunction):
    """Minimum-distance competition with fitness/novelty arbitration.

    Parameters
    ----------
    l : float, default 0.1
        Minimum descriptor distance enforced between retained individuals.
    k_nov : int, default 3
        Neighbourhood size for the novelty score used in collisions.
    """

    def __init__(self, l=0.1, k_nov=3):
        self.l = l
        self.k_nov = k_nov

    def transform(self, fitness, descriptors):
        return te_competition(fitness, descriptors, l=self.l, k_nov=self.k_nov)


class ClusterElites(CompetitionFunction):
    """Diversity-anchor competition with dynamically spread centroids.

    Parameters
    ----------
    n_centroids : int, default 1024
        Size of the anchor subpopulation re-selected each call by greedy
        max-min spread.
    """

    def __init__(self, n_centroids=1024):
        self.n_centroids = n_centroids

    def bind_task(self, task):
        self.state_ = ClusterElitesState(n_centroids=self.n_centroids)

    def transform(self, fitness, descriptors):
        state = getattr(self, "state_", None)
        if state is None:
            state = ClusterElitesState(n_centroids=self.n_centroids)
        scores, self.state_ = cluster_elites_competition(fitness, descriptors, state)
        return scores


class GlobalCompetition(CompetitionFunction):
    """No local competition: raw fitness drives selection (a plain GA)."""

    def transform(self, fitness, descriptors):
        fitness, _ = _validated_inputs(fitness, descriptors)
        return fitness.copy()
