"""Experiment configuration, run persistence, sweeps and comparisons.

Configs are flat ``section.key = value`` text files. Every run directory is
self-describing: it holds the fully resolved config snapshot, a metrics CSV
streamed while the run progresses, and the final population dump. Paths are
derived from the task, algorithm and seed only, never from timestamps, so
re-running a config reproduces the directory byte for byte.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .competition import (
    ClusterElites,
    DominatedNovelty,
    GlobalCompetition,
    MapElitesCompetition,
    ThresholdElites,
)
from .search import QDSearch
from .stats import ComparisonResult, pairwise_comparisons
from .tasks import (
    MazeLayout,
    Task,
    arm_task,
    default_maze_layout,
    learned_maze_task,
    maze_task,
    rastrigin_projection_task,
)

ALGORITHMS = ("dns", "map_elites", "threshold_elites", "cluster_elites", "plain_ga")
TASKS = ("arm", "rastrigin", "maze")
MAZE_MODES = ("final_position", "trajectory", "learned")

# offset applied to the run seed when drawing a grid-competition search grid,
# so it never collides with the metric grid seed
_SEARCH_GRID_SEED_OFFSET = 1_000_003

METRIC_COLUMNS = ("generation", "evaluations", "qd_score", "coverage", "max_fitness")


class ConfigError(ValueError):
    """Invalid experiment configuration; maps to CLI usage errors."""


@dataclass(frozen=True)
class ExperimentConfig:
    task_name: str = "maze"
    descriptor_mode: str = "final_position"
    n_samples: int = 8
    n_joints: int = 8
    n_dims: int = 8
    layout: str = "default"
    n_steps: int = 30
    step_size: float = 0.05
    latent_dim: int = 10
    refit_period: int = 50
    algo_name: str = "dns"
    k: int = 3
    l: float = 0.1
    k_nov: int = 3
    cells: int = 1024
    population_size: int = 256
    batch_size: int = 256
    generations: int = 500
    log_interval: int = 10
    seed: int = 0
    eval_workers: int = 1
    mutation_sigma: float = 0.1
    iso_sigma: float = 0.01
    parent_pool_fraction: float = 0.5
    operator: str = "iso_line"
    parent_gate: str = "competition"
    metric_cells: int = 1024
    metric_seed: int = 0
    fitness_offset: float | None = None


# dotted config key -> (dataclass field, value kind)
CONFIG_SPEC = {
    "task.name": ("task_name", "str"),
    "task.descriptor_mode": ("descriptor_mode", "str"),
    "task.n_samples": ("n_samples", "int"),
    "task.n_joints": ("n_joints", "int"),
    "task.n_dims": ("n_dims", "int"),
    "task.layout": ("layout", "str"),
    "task.n_steps": ("n_steps", "int"),
    "task.step_size": ("step_size", "float"),
    "task.latent_dim": ("latent_dim", "int"),
    "task.refit_period": ("refit_period", "int"),
    "algo.name": ("algo_name", "str"),
    "algo.k": ("k", "int"),
    "algo.l": ("l", "float"),
    "algo.k_nov": ("k_nov", "int"),
    "algo.cells": ("cells", "int"),
    "run.population_size": ("population_size", "int"),
    "run.batch_size": ("batch_size", "int"),
    "run.generations": ("generations", "int"),
    "run.log_interval": ("log_interval", "int"),
    "run.seed": ("seed", "int"),
    "run.eval_workers": ("eval_workers", "int"),
    "variation.mutation_sigma": ("mutation_sigma", "float"),
    "variation.iso_sigma": ("iso_sigma", "float"),
    "variation.parent_pool_fraction": ("parent_pool_fraction", "float"),
    "variation.operator": ("operator", "str"),
    "variation.parent_gate": ("parent_gate", "str"),
    "metrics.cells": ("metric_cells", "int"),
    "metrics.seed": ("metric_seed", "int"),
    "metrics.fitness_offset": ("fitness_offset", "optfloat"),
}

_FIELD_TO_KEY = {field: key for key, (field, _) in CONFIG_SPEC.items()}


def _parse_value(raw: str, kind: str):
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "optfloat":
            return None if raw.lower() == "none" else float(raw)
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} as {kind}") from None
    return raw


def _format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse ``key = value`` lines into a config, on top of ``base``."""
    cfg = base if base is not None else ExperimentConfig()
    updates = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        if key not in CONFIG_SPEC:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        field, kind = CONFIG_SPEC[key]
        updates[field] = _parse_value(raw, kind)
    return replace(cfg, **updates)


def load_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), base=base)


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Apply ``dotted.key -> raw string`` overrides on top of a config."""
    updates = {}
    for key, raw in overrides.items():
        if key not in CONFIG_SPEC:
            raise ConfigError(f"unknown config key {key!r}")
        field, kind = CONFIG_SPEC[key]
        updates[field] = _parse_value(str(raw), kind)
    return replace(cfg, **updates)


def config_to_text(cfg: ExperimentConfig) -> str:
    """Serialize every resolved field, sorted by key, defaults included."""
    lines = []
    for key in sorted(CONFIG_SPEC):
        field, _ = CONFIG_SPEC[key]
        lines.append(f"{key} = {_format_value(getattr(cfg, field))}")
    return "\n".join(lines) + "\n"


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.task_name not in TASKS:
        raise ConfigError(
            f"unknown task {cfg.task_name!r}: valid tasks are {', '.join(TASKS)}"
        )
    if cfg.algo_name not in ALGORITHMS:
        raise ConfigError(
            f"unknown algorithm {cfg.algo_name!r}: valid names are "
            f"{', '.join(ALGORITHMS)}"
        )
    if cfg.task_name == "maze" and cfg.descriptor_mode not in MAZE_MODES:
        raise ConfigError(
            f"unknown maze descriptor mode {cfg.descriptor_mode!r}: "
            f"valid modes are {', '.join(MAZE_MODES)}"
        )
    for name in (
        "population_size",
        "batch_size",
        "log_interval",
        "cells",
        "metric_cells",
        "k",
        "k_nov",
    ):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{_FIELD_TO_KEY[name]} must be positive")
    if cfg.generations < 0:
        raise ConfigError("run.generations must be non-negative")
    if cfg.l <= 0:
        raise ConfigError("algo.l must be positive")
    if cfg.eval_workers < 1:
        raise ConfigError("run.eval_workers must be positive")
    if cfg.algo_name == "map_elites" and cfg.task_name == "maze" and cfg.descriptor_mode == "learned":
        raise ConfigError(
            "map_elites needs predefined descriptor bounds and cannot run "
            "on learned descriptors"
        )


def build_task(cfg: ExperimentConfig) -> Task:
    validate_config(cfg)
    if cfg.task_name == "arm":
        return arm_task(cfg.n_joints)
    if cfg.task_name == "rastrigin":
        return rastrigin_projection_task(cfg.n_dims)
    if cfg.layout == "default":
        layout = default_maze_layout(n_steps=cfg.n_steps, step_size=cfg.step_size)
    else:
        layout = MazeLayout.from_file(
            cfg.layout, n_steps=cfg.n_steps, step_size=cfg.step_size
        )
    if cfg.descriptor_mode == "final_position":
        return maze_task(layout, descriptor_mode="final_position")
    if cfg.descriptor_mode == "trajectory":
        return maze_task(layout, descriptor_mode="trajectory", n_samples=cfg.n_samples)
    return learned_maze_task(
        layout,
        n_raw_samples=cfg.n_samples,
        n_components=cfg.latent_dim,
        refit_period=cfg.refit_period,
    )


def build_competition(cfg: ExperimentConfig):
    if cfg.algo_name == "dns":
        return DominatedNovelty(k=cfg.k)
    if cfg.algo_name == "map_elites":
        return MapElitesCompetition(
            n_cells=cfg.cells, grid_seed=cfg.seed + _SEARCH_GRID_SEED_OFFSET
        )
    if cfg.algo_name == "threshold_elites":
        return ThresholdElites(l=cfg.l, k_nov=cfg.k_nov)
    if cfg.algo_name == "cluster_elites":
        return ClusterElites(n_centroids=cfg.cells)
    return GlobalCompetition()


def build_search(cfg: ExperimentConfig) -> QDSearch:
    validate_config(cfg)
    return QDSearch(
        competition=build_competition(cfg),
        population_size=cfg.population_size,
        batch_size=cfg.batch_size,
        generations=cfg.generations,
        mutation_sigma=cfg.mutation_sigma,
        iso_sigma=cfg.iso_sigma,
        parent_pool_fraction=cfg.parent_pool_fraction,
        variation=cfg.operator,
        parent_gate=cfg.parent_gate,
        log_interval=cfg.log_interval,
        metric_cells=cfg.metric_cells,
        metric_seed=cfg.metric_seed,
        fitness_offset=cfg.fitness_offset,
        eval_workers=cfg.eval_workers,
        random_state=cfg.seed,
    )


def run_dir_name(cfg: ExperimentConfig, tag: str = "") -> str:
    task = build_task(cfg)
    middle = f"_{tag}" if tag else ""
    return f"{task.name}_{cfg.algo_name}{middle}_seed{cfg.seed}"


def run_to_dir(cfg: ExperimentConfig, out_root, tag: str = "") -> Path:
    """Execute one run and persist it under ``out_root``.

    Metric records are flushed to ``metrics.csv`` as they are produced, so a
    mid-run failure leaves the partial table behind along with a ``FAILED``
    marker holding the error message.
    """
    validate_config(cfg)
    task = build_task(cfg)
    search = build_search(cfg)
    run_dir = Path(out_root) / run_dir_name(cfg, tag)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "config.txt").write_text(config_to_text(cfg), encoding="utf-8")
    failed_marker = run_dir / "FAILED"
    if failed_marker.exists():
        failed_marker.unlink()

    with open(run_dir / "metrics.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(METRIC_COLUMNS) + "\n")

        def stream(rec):
            fh.write(
                f"{rec.generation},{rec.evaluations},{rec.qd_score!r},"
                f"{rec.coverage!r},{rec.max_fitness!r}\n"
            )
            fh.flush()

        try:
            search.fit(task, record_callback=stream)
        except Exception as exc:
            failed_marker.write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
            raise

    _write_population(run_dir / "population.csv", search.population_)
    return run_dir


def _write_population(path: Path, pop) -> None:
    g_dim = pop.genome_dim
    d_dim = pop.descriptor_dim
    header = (
        [f"g{i}" for i in range(g_dim)] + ["fitness"] + [f"d{i}" for i in range(d_dim)]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in range(len(pop)):
            values = (
                [repr(v) for v in pop.genomes[row].tolist()]
                + [repr(float(pop.fitness[row]))]
                + [repr(v) for v in pop.descriptors[row].tolist()]
            )
            fh.write(",".join(values) + "\n")


def read_metrics(run_dir) -> dict:
    """Load a run's metrics table as a dict of column arrays."""
    path = Path(run_dir) / "metrics.csv"
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"empty metrics file in {run_dir}")
    header = lines[0].split(",")
    columns = {name: [] for name in header}
    for line in lines[1:]:
        for name, value in zip(header, line.split(",")):
            columns[name].append(float(value))
    return {name: np.asarray(vals) for name, vals in columns.items()}


def final_metric(run_dir, metric: str) -> float:
    columns = read_metrics(run_dir)
    if metric not in columns:
        raise ValueError(
            f"run {run_dir} has no metric {metric!r}; available: "
            f"{', '.join(columns)}"
        )
    return float(columns[metric][-1])


SWEEPABLE = ("algo.k", "algo.l", "algo.k_nov", "algo.cells")


def sweep(cfg: ExperimentConfig, parameter: str, values, seeds, out_root):
    """One run per (value, seed); summarize final medians per value.

    Returns ``(rows, best_value)`` where each row is ``(value, median
    qd_score, median coverage)`` and the best value maximizes median QD
    score. A ``summary.csv`` is written under ``out_root``.
    """
    if parameter not in SWEEPABLE:
        raise ConfigError(
            f"cannot sweep {parameter!r}: choose one of {', '.join(SWEEPABLE)}"
        )
    if not values:
        raise ConfigError("sweep needs at least one parameter value")
    if not seeds:
        raise ConfigError("sweep needs at least one seed")
    field, kind = CONFIG_SPEC[parameter]
    short = parameter.split(".", 1)[1]
    rows = []
    for value in values:
        parsed = _parse_value(str(value), kind)
        finals_qd = []
        finals_cov = []
        for seed in seeds:
            run_cfg = replace(cfg, **{field: parsed, "seed": int(seed)})
            run_dir = run_to_dir(run_cfg, out_root, tag=f"{short}{parsed}")
            finals_qd.append(final_metric(run_dir, "qd_score"))
            finals_cov.append(final_metric(run_dir, "coverage"))
        rows.append(
            (parsed, statistics.median(finals_qd), statistics.median(finals_cov))
        )
    best_value = max(rows, key=lambda r: r[1])[0]
    summary = Path(out_root) / "summary.csv"
    with open(summary, "w", encoding="utf-8") as fh:
        fh.write(f"{short},median_qd_score,median_coverage\n")
        for value, med_qd, med_cov in rows:
            fh.write(f"{value},{med_qd!r},{med_cov!r}\n")
    return rows, best_value


def compare_runs(groups: dict, metric: str = "qd_score", alpha: float = 0.05):
    """Pairwise Mann-Whitney tests on final metrics across run groups.

    ``groups`` maps labels to lists of run directories; each group needs at
    least two runs. Returns the Holm-corrected :class:`ComparisonResult`
    list.
    """
    if len(groups) < 2:
        raise ConfigError("need at least two groups to compare")
    samples = {}
    for label, run_dirs in groups.items():
        if len(run_dirs) < 2:
            raise ConfigError(f"group {label!r} needs at least two runs")
        samples[label] = [final_metric(d, metric) for d in run_dirs]
    return pairwise_comparisons(samples, alpha=alpha)


def write_comparisons(results: list[ComparisonResult], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("pair,u_statistic,p_value,significant,alpha\n")
        for res in results:
            fh.write(
                f"{res.label},{res.u_statistic!r},{res.p_value!r},"
                f"{res.significant},{res.alpha!r}\n"
            )
