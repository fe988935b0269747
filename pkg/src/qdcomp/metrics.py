"""Projected quality-diversity metrics over a passive randomized grid.

Populations are projected from scratch onto an independent centroid grid at
every call; nothing persists between logging steps, so structured and
unstructured algorithms are measured on equal footing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_positive_int
from .geometry import CentroidSet, data_driven_centroids, pairwise_distances, random_centroids


@dataclass(frozen=True)
class MetricsRecord:
    generation: int
    evaluations: int
    qd_score: float
    coverage: float
    max_fitness: float

    FIELDS = ("generation", "evaluations", "qd_score", "coverage", "max_fitness")


def project_and_score(pop, grid: CentroidSet, fitness_offset):
    """Project a population onto the grid and score the resulting elites.

    Each individual is assigned to its nearest centroid (ties to the lower
    centroid index); the fittest occupant of each cell is its elite. Returns
    ``(qd_score, coverage, max_fitness)`` where the QD score sums
    ``elite_fitness + fitness_offset`` over occupied cells (every addend must
    be non-negative, otherwise the offset is misconfigured and this raises),
    and coverage is the fraction of occupied cells.

    An empty population scores ``(0.0, 0.0, nan)``.
    """
    fitness = np.asarray(pop.fitness, dtype=float)
    descriptors = np.asarray(pop.descriptors, dtype=float)
    offset = float(fitness_offset)
    n = len(fitness)
    if n == 0:
        return 0.0, 0.0, float("nan")
    if descriptors.shape[1] != grid.dim:
        raise ValueError(
            f"descriptor dim {descriptors.shape[1]} does not match grid dim {grid.dim}"
        )
    cells = pairwise_distances(descriptors, grid.points).argmin(axis=1)
    order = np.lexsort((np.arange(n), -fitness, cells))
    sorted_cells = cells[order]
    first = np.ones(n, dtype=bool)
    first[1:] = sorted_cells[1:] != sorted_cells[:-1]
    elite_fitness = fitness[order[first]]

    addends = elite_fitness + offset
    if np.any(addends < 0):
        raise ValueError(
            "fitness_offset leaves a negative QD score contribution; "
            "offset must be at least the negated fitness lower bound"
        )
    # sequential sum in ascending cell order keeps the score deterministic
    qd_score = float(sum(addends.tolist()))
    coverage = len(elite_fitness) / len(grid)
    return qd_score, coverage, float(fitness.max())


def make_metric_grid(task, n_cells, seed, population_sample=None) -> CentroidSet:
    """Randomized centroid grid for metric projection.

    Bounded tasks get uniform centroids inside their declared descriptor
    bounds. Tasks without bounds fall back to the bounding box of the
    supplied population descriptors, which therefore must be provided.
    """
    n_cells = check_positive_int(n_cells, "n_cells")
    if task.descriptor_bounds is not None:
        return random_centroids(n_cells, task.descriptor_bounds, seed)
    if population_sample is None:
        raise ValueError(
            f"task {task.name!r} declares no descriptor bounds; "
            "a population sample is required to place the metric grid"
        )
    return data_driven_centroids(n_cells, population_sample, seed)
