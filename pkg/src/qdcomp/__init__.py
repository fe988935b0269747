"""Quality-diversity optimization with pluggable local competition.

The search loop is a plain genetic algorithm; what makes it quality-diverse
is a competition transform that rescores the population from raw fitness and
descriptors before truncation selection. Transforms, tasks and the search
loop follow scikit-learn estimator conventions so they can be configured,
cloned and composed like any other estimator.
"""

from .competition import (
    ClusterElites,
    ClusterElitesState,
    CompetitionFunction,
    DominatedNovelty,
    GlobalCompetition,
    MapElitesCompetition,
    ThresholdElites,
    cluster_elites_competition,
    dns_competition,
    me_competition,
    te_competition,
)
from .geometry import (
    CentroidSet,
    cvt_centroids,
    farthest_point_indices,
    k_nearest,
    novelty_scores,
    pairwise_distances,
    random_centroids,
)
from .metrics import MetricsRecord, make_metric_grid, project_and_score
from .population import (
    Population,
    VariationParams,
    concat,
    reproduce,
    select_top_n,
    top_indices,
)
from .search import QDSearch, evaluate_genomes, run_experiment
from .stats import (
    ComparisonResult,
    holm_bonferroni,
    mann_whitney_u,
    pairwise_comparisons,
)
from .tasks import (
    MazeLayout,
    Task,
    TrajectoryPCA,
    arm_task,
    default_maze_layout,
    learned_maze_task,
    maze_task,
    rastrigin_projection_task,
    simulate_maze,
)

__version__ = "0.1.0"

__all__ = [
    "CentroidSet",
    "ClusterElites",
    "ClusterElitesState",
    "ComparisonResult",
    "CompetitionFunction",
    "DominatedNovelty",
    "GlobalCompetition",
    "MapElitesCompetition",
    "MazeLayout",
    "MetricsRecord",
    "Population",
    "QDSearch",
    "Task",
    "ThresholdElites",
    "TrajectoryPCA",
    "VariationParams",
    "arm_task",
    "cluster_elites_competition",
    "concat",
    "cvt_centroids",
    "default_maze_layout",
    "dns_competition",
    "evaluate_genomes",
    "farthest_point_indices",
    "holm_bonferroni",
    "k_nearest",
    "learned_maze_task",
    "make_metric_grid",
    "mann_whitney_u",
    "maze_task",
    "me_competition",
    "novelty_scores",
    "pairwise_comparisons",
    "pairwise_distances",
    "project_and_score",
    "random_centroids",
    "rastrigin_projection_task",
    "reproduce",
    "run_experiment",
    "select_top_n",
    "simulate_maze",
    "te_competition",
    "top_indices",
]
