"""Population arrays and the per-generation operations on them.

A population is four parallel arrays: genomes, raw fitness, descriptors and
competition fitness. Genomes live in the unit box; tasks rescale internally.
Competition fitness may be ``+/-inf``; ``nan`` marks not-yet-scored rows and
is rejected by every operation that consumes scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ._validation import (
    as_float_matrix,
    as_float_vector,
    check_consistent_length,
    check_finite,
    check_positive_int,
)


@dataclass(frozen=True)
class Population:
    genomes: np.ndarray
    fitness: np.ndarray
    descriptors: np.ndarray
    competition_fitness: np.ndarray

    def __post_init__(self):
        genomes = as_float_matrix(self.genomes, "genomes")
        fitness = as_float_vector(self.fitness, "fitness")
        descriptors = as_float_matrix(self.descriptors, "descriptors")
        scores = as_float_vector(self.competition_fitness, "competition_fitness")
        check_consistent_length(
            "genomes", genomes,
            "fitness", fitness,
            "descriptors", descriptors,
            "competition_fitness", scores,
        )
        check_finite(genomes, "genomes")
        check_finite(fitness, "fitness")
        check_finite(descriptors, "descriptors")
        object.__setattr__(self, "genomes", genomes)
        object.__setattr__(self, "fitness", fitness)
        object.__setattr__(self, "descriptors", descriptors)
        object.__setattr__(self, "competition_fitness", scores)

    def __len__(self) -> int:
        return len(self.fitness)

    @property
    def genome_dim(self) -> int:
        return self.genomes.shape[1]

    @property
    def descriptor_dim(self) -> int:
        return self.descriptors.shape[1]

    def take(self, indices) -> "Population":
        """Subset rows, preserving the order of ``indices``."""
        idx = np.asarray(indices, dtype=int)
        return Population(
            genomes=self.genomes[idx].copy(),
            fitness=self.fitness[idx].copy(),
            descriptors=self.descriptors[idx].copy(),
            competition_fitness=self.competition_fitness[idx].copy(),
        )

    def with_competition(self, scores) -> "Population":
        scores = as_float_vector(scores, "competition_fitness")
        if len(scores) != len(self):
            raise ValueError("competition fitness length does not match population")
        return replace(self, competition_fitness=scores)

    @classmethod
    def evaluated(cls, genomes, fitness, descriptors) -> "Population":
        """Build a population whose competition scores are not yet computed."""
        fitness = as_float_vector(fitness, "fitness")
        return cls(
            genomes=genomes,
            fitness=fitness,
            descriptors=descriptors,
            competition_fitness=np.full(len(fitness), np.nan),
        )


@dataclass(frozen=True)
class VariationParams:
    """Reproduction settings.

    ``mutation_sigma`` is the noise scale along the line between the two
    parents for the default iso+line operator, or the per-gene Gaussian std
    when ``operator`` is ``"gaussian"``. ``parent_pool_fraction`` keeps the
    above-median rule at its 0.5 default.
    """

    mutation_sigma: float = 0.1
    iso_sigma: float = 0.01
    batch_size: int = 256
    parent_pool_fraction: float = 0.5
    operator: str = "iso_line"
    parent_gate: str = "competition"

    def __post_init__(self):
        if self.mutation_sigma < 0 or self.iso_sigma < 0:
            raise ValueError("noise scales must be non-negative")
        check_positive_int(self.batch_size, "batch_size")
        if not 0 < self.parent_pool_fraction <= 1:
            raise ValueError("parent_pool_fraction must be in (0, 1]")
        if self.operator not in ("iso_line", "gaussian"):
            raise ValueError(f"unknown variation operator {self.operator!r}")
        if self.parent_gate not in ("competition", "fitness"):
            raise ValueError(f"unknown parent gate {self.parent_gate!r}")


def top_indices(scores, n) -> np.ndarray:
    """Indices of the n highest scores, ties broken by lower index.

    Returned in rank order (best first). ``+inf`` ranks above everything,
    ``-inf`` below; ``nan`` means the scores were never computed and raises.
    """
    scores = as_float_vector(scores, "scores")
    n = check_positive_int(n, "n")
    if np.isnan(scores).any():
        raise ValueError("competition fitness has not been computed")
    if n > len(scores):
        raise ValueError(f"cannot select {n} individuals out of {len(scores)}")
    order = np.lexsort((np.arange(len(scores)), -scores))
    return order[:n]


def select_top_n(pop: Population, n) -> Population:
    """Truncation selection: keep the n best by competition fitness.

    Survivors stay in their original relative order, so selecting the whole
    population is the identity.
    """
    keep = np.sort(top_indices(pop.competition_fitness, n))
    return pop.take(keep)


def concat(pop: Population, genomes, fitness, descriptors) -> Population:
    """Append an evaluated offspring batch, parents first.

    The offspring's competition fitness is marked unscored; the combined
    population is expected to be re-scored before any selection.
    """
    genomes = as_float_matrix(genomes, "offspring genomes")
    fitness = as_float_vector(fitness, "offspring fitness")
    descriptors = as_float_matrix(descriptors, "offspring descriptors")
    check_consistent_length(
        "offspring genomes", genomes,
        "offspring fitness", fitness,
        "offspring descriptors", descriptors,
    )
    if genomes.shape[1] != pop.genome_dim:
        raise ValueError(
            f"offspring genome dim {genomes.shape[1]} != population {pop.genome_dim}"
        )
    if len(genomes) and descriptors.shape[1] != pop.descriptor_dim:
        raise ValueError(
            f"offspring descriptor dim {descriptors.shape[1]} "
            f"!= population {pop.descriptor_dim}"
        )
    if len(genomes) == 0:
        return pop
    return Population(
        genomes=np.concatenate([pop.genomes, genomes]),
        fitness=np.concatenate([pop.fitness, fitness]),
        descriptors=np.concatenate([pop.descriptors, descriptors]),
        competition_fitness=np.concatenate(
            [pop.competition_fitness, np.full(len(genomes), np.nan)]
        ),
    )


def reproduce(pop: Population, params: VariationParams, rng: np.random.Generator):
    """Draw parents from the top scorers and emit a batch of offspring.

    Parents are sampled uniformly (with replacement) from the
    ``ceil(len(pop) * parent_pool_fraction)`` individuals with the highest
    competition fitness (raw fitness when ``parent_gate`` is ``"fitness"``).
    Offspring are iso+line perturbations of two parents, clipped to the unit
    box. Deterministic for a given generator state.
    """
    n = len(pop)
    if n < 2:
        raise ValueError("insufficient parents: need a population of at least 2")
    gate = (
        pop.competition_fitness
        if params.parent_gate == "competition"
        else pop.fitness
    )
    pool = top_indices(gate, math.ceil(n * params.parent_pool_fraction))
    b = params.batch_size
    first = pop.genomes[pool[rng.integers(0, len(pool), size=b)]]
    second = pop.genomes[pool[rng.integers(0, len(pool), size=b)]]
    if params.operator == "iso_line":
        iso = rng.normal(size=first.shape) * params.iso_sigma
        line = rng.normal(size=(b, 1)) * params.mutation_sigma
        children = first + iso + line * (second - first)
    else:
        children = first + rng.normal(size=first.shape) * params.mutation_sigma
    return np.clip(children, 0.0, 1.0)
