"""The generation loop: reproduce, concatenate, evaluate, compete, truncate.

:class:`QDSearch` is a scikit-learn style estimator whose ``fit`` runs the
whole optimization on a task. The competition transform is a pluggable
component; swapping it changes the algorithm (grid competition recovers a
classic archive method, distance-to-fitter competition needs no bounds at
all, raw fitness degrades to a plain GA).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.exceptions import NotFittedError

from ._validation import as_float_matrix, as_float_vector, check_positive_int
from .competition import DominatedNovelty
from .metrics import MetricsRecord, make_metric_grid, project_and_score
from .population import Population, VariationParams, concat, reproduce, top_indices
from .tasks import Task


def evaluate_genomes(genomes, task: Task, workers=1):
    """Apply the task's evaluation map to a genome batch.

    With ``workers > 1`` the batch is split into contiguous chunks evaluated
    on a thread pool and reassembled in index order, so results are identical
    to the serial path. Raises with the offending genome index if the task
    emits a non-finite value.
    """
    genomes = as_float_matrix(genomes, "genomes")
    if genomes.shape[1] != task.genome_dim:
        raise ValueError(
            f"genome dim {genomes.shape[1]} does not match task "
            f"{task.name!r} ({task.genome_dim})"
        )
    feature_dim = (
        task.raw_descriptor_dim
        if task.descriptor_model is not None
        else task.descriptor_dim
    )
    if len(genomes) == 0:
        return np.empty(0), np.empty((0, feature_dim))

    if workers > 1 and len(genomes) >= 2 * workers:
        chunks = np.array_split(np.arange(len(genomes)), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda idx: task.evaluate(genomes[idx]), chunks))
        fitness = np.concatenate([np.asarray(p[0], dtype=float) for p in parts])
        features = np.concatenate([np.asarray(p[1], dtype=float) for p in parts])
    else:
        fitness, features = task.evaluate(genomes)
        fitness = np.asarray(fitness, dtype=float)
        features = np.asarray(features, dtype=float)

    fitness = as_float_vector(fitness, "task fitness")
    features = as_float_matrix(features, "task descriptors")
    if len(fitness) != len(genomes) or len(features) != len(genomes):
        raise ValueError(f"task {task.name!r} returned wrong batch length")
    if features.shape[1] != feature_dim:
        raise ValueError(
            f"task {task.name!r} returned descriptor dim {features.shape[1]}, "
            f"declared {feature_dim}"
        )
    bad = ~np.isfinite(fitness) | ~np.isfinite(features).all(axis=1)
    if bad.any():
        raise ValueError(
            f"task {task.name!r} produced a non-finite output for genome "
            f"index {int(np.flatnonzero(bad)[0])}"
        )
    return fitness, features


class QDSearch(BaseEstimator):
    """Quality-diversity optimization as truncation selection on transformed
    fitness.

    Parameters
    ----------
    competition : CompetitionFunction, optional
        The local-competition transform; cloned at fit time. Defaults to
        :class:`DominatedNovelty` with its default locality.
    population_size, batch_size, generations : int
        Population size kept after each generation, offspring per
        generation, and number of generations.
    mutation_sigma, iso_sigma, parent_pool_fraction, variation, parent_gate :
        Reproduction settings, see :class:`VariationParams`.
    log_interval : int
        Generations between metric records; generation 0 and the final
        generation are always recorded.
    metric_cells : int
        Size of the passive randomized grid used for projected metrics.
    metric_seed : int
        Seed of the metric grid, deliberately independent of ``random_state``
        so different runs are measured on the same grid.
    fitness_offset : float, optional
        Offset added to elite fitness in the QD score; defaults to the
        negated analytic fitness lower bound declared by the task.
    eval_workers : int
        Thread count for batch evaluation; any value yields identical
        results.
    random_state : int
        Seed for initialization and variation.

    Attributes
    ----------
    population_ : Population
        Final population of exactly ``population_size`` individuals.
    history_ : list[MetricsRecord]
        Projected metrics, one record per logging step.
    n_evaluations_ : int
        Total task evaluations, ``population_size + generations *
        batch_size``.
    """

    def __init__(
        self,
        competition=None,
        population_size=256,
        batch_size=256,
        generations=500,
        mutation_sigma=0.1,
        iso_sigma=0.01,
        parent_pool_fraction=0.5,
        variation="iso_line",
        parent_gate="competition",
        log_interval=10,
        metric_cells=1024,
        metric_seed=0,
        fitness_offset=None,
        eval_workers=1,
        random_state=0,
    ):
        self.competition = competition
        self.population_size = population_size
        self.batch_size = batch_size
        self.generations = generations
        self.mutation_sigma = mutation_sigma
        self.iso_sigma = iso_sigma
        self.parent_pool_fraction = parent_pool_fraction
        self.variation = variation
        self.parent_gate = parent_gate
        self.log_interval = log_interval
        self.metric_cells = metric_cells
        self.metric_seed = metric_seed
        self.fitness_offset = fitness_offset
        self.eval_workers = eval_workers
        self.random_state = random_state

    def fit(self, task: Task, record_callback=None):
        """Run the full generation loop on ``task``.

        ``record_callback`` is invoked with each :class:`MetricsRecord` as it
        is produced, which lets callers stream partial results to disk.
        """
        n = check_positive_int(self.population_size, "population_size")
        check_positive_int(self.batch_size, "batch_size")
        if self.generations < 0:
            raise ValueError("generations must be non-negative")
        check_positive_int(self.log_interval, "log_interval")
        params = VariationParams(
            mutation_sigma=self.mutation_sigma,
            iso_sigma=self.iso_sigma,
            batch_size=self.batch_size,
            parent_pool_fraction=self.parent_pool_fraction,
            operator=self.variation,
            parent_gate=self.parent_gate,
        )
        offset = self._resolve_offset(task)
        rng = np.random.default_rng(self.random_state)

        competition = clone(self.competition) if self.competition is not None else DominatedNovelty()
        competition.bind_task(task)
        self.competition_ = competition

        learned = task.descriptor_model is not None
        model = clone(task.descriptor_model) if learned else None

        genomes = rng.uniform(size=(n, task.genome_dim))
        fitness, features = evaluate_genomes(genomes, task, workers=self.eval_workers)
        if learned:
            model.observe(features)
            model.fit()
            raw = features
            descriptors = model.transform(raw)
        else:
            raw = None
            descriptors = features
        scores = competition.transform(fitness, descriptors)
        pop = Population(genomes, fitness, descriptors, scores)

        if task.descriptor_bounds is not None:
            grid = make_metric_grid(task, self.metric_cells, self.metric_seed)
        else:
            grid = None

        history = []

        def record(generation):
            metric_grid = grid
            if metric_grid is None:
                metric_grid = make_metric_grid(
                    task,
                    self.metric_cells,
                    self.metric_seed,
                    population_sample=pop.descriptors,
                )
            qd, coverage, best = project_and_score(pop, metric_grid, offset)
            rec = MetricsRecord(
                generation=generation,
                evaluations=n + generation * self.batch_size,
                qd_score=qd,
                coverage=coverage,
                max_fitness=best,
            )
            history.append(rec)
            if record_callback is not None:
                record_callback(rec)

        record(0)
        for gen in range(1, self.generations + 1):
            offspring = reproduce(pop, params, rng)
            off_fitness, off_features = evaluate_genomes(
                offspring, task, workers=self.eval_workers
            )
            if learned:
                model.observe(off_features)
                off_descriptors = model.transform(off_features)
                combined_raw = np.concatenate([raw, off_features])
            else:
                off_descriptors = off_features
                combined_raw = None
            combined = concat(pop, offspring, off_fitness, off_descriptors)
            if learned and gen % model.refit_period == 0:
                model.fit()
                combined = Population(
                    combined.genomes,
                    combined.fitness,
                    model.transform(combined_raw),
                    combined.competition_fitness,
                )
            scores = competition.transform(combined.fitness, combined.descriptors)
            combined = combined.with_competition(scores)
            keep = np.sort(top_indices(scores, n))
            pop = combined.take(keep)
            if learned:
                raw = combined_raw[keep]
            if gen % self.log_interval == 0 or gen == self.generations:
                record(gen)

        self.task_ = task
        self.population_ = pop
        self.history_ = history
        self.n_evaluations_ = n + self.generations * self.batch_size
        self.descriptor_model_ = model
        self.fitness_offset_ = offset
        return self

    def _resolve_offset(self, task: Task) -> float:
        if self.fitness_offset is not None:
            return float(self.fitness_offset)
        if task.fitness_lower_bound is None:
            raise ValueError(
                f"task {task.name!r} declares no fitness lower bound; "
                "set fitness_offset explicitly"
            )
        return -float(task.fitness_lower_bound)

    @property
    def final_record_(self) -> MetricsRecord:
        if not hasattr(self, "history_"):
            raise NotFittedError("QDSearch has not been fit")
        return self.history_[-1]


def run_experiment(task: Task, record_callback=None, **search_params) -> QDSearch:
    """One-call convenience wrapper: build a :class:`QDSearch` and fit it."""
    return QDSearch(**search_params).fit(task, record_callback=record_callback)
