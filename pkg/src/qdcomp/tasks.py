"""Benchmark tasks: planar arm, projected Rastrigin and maze navigation.

Every task evaluates genomes from the unit box and returns finite fitness
values plus descriptors. Descriptor spaces span the interesting regimes:
a well-defined 2-D box (arm, Rastrigin), a discontinuous box with unreachable
regions (maze with walls), high-dimensional trajectory descriptors, and a
learned linear embedding that changes during the run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from ._validation import (
    as_float_matrix,
    check_finite,
    check_positive_float,
    check_positive_int,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Task:
    """A genome evaluation map with declared dimensions and bounds.

    ``evaluate`` is pure and batch-shaped: ``(n, genome_dim) -> ((n,),
    (n, descriptor_dim))``. ``fitness_lower_bound`` is the analytic minimum
    used to derive non-negative metric offsets. When ``descriptor_model`` is
    set, ``evaluate`` emits raw features of width ``raw_descriptor_dim`` and
    the search loop owns projecting them to ``descriptor_dim`` dimensions.
    """

    name: str
    genome_dim: int
    descriptor_dim: int
    evaluate: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
    descriptor_bounds: np.ndarray | None = None
    fitness_lower_bound: float | None = None
    descriptor_model: "TrajectoryPCA | None" = None
    raw_descriptor_dim: int | None = None


def _unit_box(dim):
    return np.tile([0.0, 1.0], (dim, 1))


def arm_task(n_joints=8) -> Task:
    """Planar arm with unit total reach.

    Genes map linearly to joint angles in [-pi, pi]; fitness is the negated
    variance of the angles (smooth postures score best, maximum 0) and the
    descriptor is the arm tip position rescaled to the unit square.
    """
    n_joints = check_positive_int(n_joints, "n_joints")
    if n_joints < 2:
        raise ValueError("arm task needs at least 2 joints")

    def evaluate(genomes):
        genomes = np.asarray(genomes, dtype=float)
        angles = (genomes * 2.0 - 1.0) * np.pi
        fitness = -angles.var(axis=1)
        heading = np.cumsum(angles, axis=1)
        tip_x = np.cos(heading).sum(axis=1) / n_joints
        tip_y = np.sin(heading).sum(axis=1) / n_joints
        descriptors = np.stack([(tip_x + 1.0) / 2.0, (tip_y + 1.0) / 2.0], axis=1)
        return fitness, descriptors

    return Task(
        name=f"arm-{n_joints}",
        genome_dim=n_joints,
        descriptor_dim=2,
        evaluate=evaluate,
        descriptor_bounds=_unit_box(2),
        fitness_lower_bound=-np.pi**2,
    )


def rastrigin_projection_task(n_dims=8) -> Task:
    """Negated Rastrigin over [-5.12, 5.12]^n with the first two genes as
    descriptor. The global optimum (fitness 0) sits at the box centre."""
    n_dims = check_positive_int(n_dims, "n_dims")
    if n_dims < 2:
        raise ValueError("rastrigin task needs at least 2 dimensions")
    span = 5.12

    def evaluate(genomes):
        genomes = np.asarray(genomes, dtype=float)
        x = (genomes * 2.0 - 1.0) * span
        value = 10.0 * n_dims + (x**2 - 10.0 * np.cos(2.0 * np.pi * x)).sum(axis=1)
        return -value, genomes[:, :2].copy()

    return Task(
        name=f"rastrigin-{n_dims}",
        genome_dim=n_dims,
        descriptor_dim=2,
        evaluate=evaluate,
        descriptor_bounds=_unit_box(2),
        fitness_lower_bound=-(span**2 + 20.0) * n_dims,
    )


DEFAULT_MAZE = """\
..........
.###..###.
.###..###.
.###..###.
....S.....
.###..###.
.###..###.
.###..###.
..........
..........
"""


@dataclass(frozen=True)
class MazeLayout:
    """Unit-square arena with axis-aligned rectangular walls.

    ``walls`` has rows ``(xmin, xmax, ymin, ymax)``. Wall interiors are open:
    positions exactly on a face are legal, which is what the collision rule
    produces when it truncates a step at a wall.
    """

    walls: np.ndarray
    start: tuple[float, float]
    n_steps: int = 30
    step_size: float = 0.05

    def __post_init__(self):
        walls = np.asarray(self.walls, dtype=float).reshape(-1, 4)
        check_finite(walls, "walls")
        if np.any(walls[:, 0] >= walls[:, 1]) or np.any(walls[:, 2] >= walls[:, 3]):
            raise ValueError("every wall needs xmin < xmax and ymin < ymax")
        if walls.size and (walls.min() < 0.0 or walls.max() > 1.0):
            raise ValueError("walls must lie inside the unit arena")
        start = (float(self.start[0]), float(self.start[1]))
        if not (0.0 <= start[0] <= 1.0 and 0.0 <= start[1] <= 1.0):
            raise ValueError("start must lie inside the unit arena")
        if _inside_any_wall(walls, start[0], start[1]):
            raise ValueError("start position is inside a wall")
        check_positive_int(self.n_steps, "n_steps")
        check_positive_float(self.step_size, "step_size")
        object.__setattr__(self, "walls", walls)
        object.__setattr__(self, "start", start)

    @property
    def blocked_fraction(self) -> float:
        """Total wall area; exact when walls do not overlap (grid layouts)."""
        w = self.walls
        return float(((w[:, 1] - w[:, 0]) * (w[:, 3] - w[:, 2])).sum())

    @classmethod
    def from_text(cls, text, n_steps=30, step_size=0.05) -> "MazeLayout":
        """Parse a character-grid layout: ``#`` wall, ``.`` free, ``S`` start.

        Each grid cell maps to an equal-sized box in the unit square, row 0
        at the top. Horizontal runs of wall cells are merged into single
        boxes. Exactly one start cell is required; the start point is its
        centre.
        """
        rows = [line for line in text.splitlines() if line.strip()]
        if not rows:
            raise ValueError("empty maze text")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("maze rows must all have the same width")
        height = len(rows)
        start = None
        walls = []
        for r, row in enumerate(rows):
            run_start = None
            for c, ch in enumerate(row + "."):
                if ch == "#":
                    if run_start is None:
                        run_start = c
                    continue
                if run_start is not None:
                    walls.append(
                        (
                            run_start / width,
                            c / width,
                            1.0 - (r + 1) / height,
                            1.0 - r / height,
                        )
                    )
                    run_start = None
                if ch == "S":
                    if start is not None:
                        raise ValueError("maze text has more than one start cell")
                    start = ((c + 0.5) / width, 1.0 - (r + 0.5) / height)
                elif ch != ".":
                    raise ValueError(f"unknown maze cell character {ch!r}")
        if start is None:
            raise ValueError("maze text has no start cell 'S'")
        return cls(
            walls=np.asarray(walls, dtype=float).reshape(-1, 4),
            start=start,
            n_steps=n_steps,
            step_size=step_size,
        )

    @classmethod
    def from_file(cls, path, n_steps=30, step_size=0.05) -> "MazeLayout":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read(), n_steps=n_steps, step_size=step_size)


def default_maze_layout(n_steps=30, step_size=0.05) -> MazeLayout:
    """Four-pillar arena blocking 36% of the unit square."""
    return MazeLayout.from_text(DEFAULT_MAZE, n_steps=n_steps, step_size=step_size)


def _inside_any_wall(walls, x, y) -> bool:
    return bool(
        np.any(
            (walls[:, 0] < x) & (x < walls[:, 1])
            & (walls[:, 2] < y) & (y < walls[:, 3])
        )
    )


def _blocked_axis_move(pos, other, delta, faces_lo, faces_hi, band_lo, band_hi):
    """Move one coordinate, truncating any step that would cross a wall face.

    A wall blocks the move only while the orthogonal coordinate is strictly
    inside its band, so positions resting exactly on a face slide freely
    along it. A forward move stops at the smallest blocking low face, a
    backward move at the largest blocking high face; the two cases are
    mutually exclusive for any single step.
    """
    target = np.clip(pos + delta, 0.0, 1.0)
    if len(faces_lo) == 0:
        return target
    in_band = (other[:, None] > band_lo) & (other[:, None] < band_hi)
    forward = in_band & (pos[:, None] <= faces_lo) & (faces_lo < target[:, None])
    stop_lo = np.where(forward, faces_lo, np.inf).min(axis=1)
    backward = in_band & (pos[:, None] >= faces_hi) & (faces_hi > target[:, None])
    stop_hi = np.where(backward, faces_hi, -np.inf).max(axis=1)
    return np.maximum(np.minimum(target, stop_lo), stop_hi)


def simulate_maze(layout: MazeLayout, commands) -> np.ndarray:
    """Integrate per-step velocity commands through the walled arena.

    ``commands`` has shape (batch, n_steps, 2) with entries in [-1, 1]; each
    axis of a step is applied independently and truncated on wall contact.
    Returns the full trajectory of shape (batch, n_steps, 2).
    """
    commands = np.asarray(commands, dtype=float)
    batch, n_steps, _ = commands.shape
    walls = layout.walls
    x = np.full(batch, layout.start[0])
    y = np.full(batch, layout.start[1])
    trajectory = np.empty((batch, n_steps, 2))
    dx = commands[:, :, 0] * layout.step_size
    dy = commands[:, :, 1] * layout.step_size
    x_lo, x_hi, y_lo, y_hi = walls[:, 0], walls[:, 1], walls[:, 2], walls[:, 3]
    for s in range(n_steps):
        x = _blocked_axis_move(x, y, dx[:, s], x_lo, x_hi, y_lo, y_hi)
        y = _blocked_axis_move(y, x, dy[:, s], y_lo, y_hi, x_lo, x_hi)
        trajectory[:, s, 0] = x
        trajectory[:, s, 1] = y
    return trajectory


def trajectory_sample_indices(n_steps, n_samples) -> np.ndarray:
    """Evenly spread step indices ending at the final step."""
    n_samples = check_positive_int(n_samples, "n_samples")
    if n_samples > n_steps:
        raise ValueError(f"n_samples ({n_samples}) exceeds n_steps ({n_steps})")
    return (np.arange(1, n_samples + 1) * n_steps) // n_samples - 1


def maze_task(layout=None, descriptor_mode="final_position", n_samples=8) -> Task:
    """Point robot steered by per-step velocity commands.

    The genome packs ``2 * n_steps`` command components; fitness is the
    negated control energy (sum of squared commands, maximum 0 for staying
    put). Descriptors are either the final position or ``n_samples`` evenly
    spaced trajectory points flattened to ``2 * n_samples`` dimensions.
    """
    if layout is None:
        layout = default_maze_layout()
    if descriptor_mode not in ("final_position", "trajectory"):
        raise ValueError(f"unknown descriptor mode {descriptor_mode!r}")
    n_steps = layout.n_steps
    if descriptor_mode == "trajectory":
        sample_idx = trajectory_sample_indices(n_steps, n_samples)
        descriptor_dim = 2 * n_samples
        tag = f"maze-traj{n_samples}"
    else:
        sample_idx = None
        descriptor_dim = 2
        tag = "maze-final"

    def evaluate(genomes):
        genomes = np.asarray(genomes, dtype=float)
        commands = genomes.reshape(len(genomes), n_steps, 2) * 2.0 - 1.0
        fitness = -(commands**2).sum(axis=(1, 2))
        trajectory = simulate_maze(layout, commands)
        if sample_idx is None:
            descriptors = trajectory[:, -1, :].copy()
        else:
            descriptors = trajectory[:, sample_idx, :].reshape(len(genomes), -1)
        return fitness, descriptors

    return Task(
        name=tag,
        genome_dim=2 * n_steps,
        descriptor_dim=descriptor_dim,
        evaluate=evaluate,
        descriptor_bounds=_unit_box(descriptor_dim),
        fitness_lower_bound=-2.0 * n_steps,
    )


class TrajectoryPCA(BaseEstimator, TransformerMixin):
    """Linear descriptor extractor refit periodically from buffered features.

    Maintains a rolling buffer of raw feature rows, recomputes the mean and
    the top ``n_components`` principal directions on :meth:`fit`, and
    projects with :meth:`transform`. Rank-deficient buffers are padded with
    an arbitrary orthonormal completion and flagged in the logs.
    """

    def __init__(self, n_components=10, refit_period=50, buffer_size=2048):
        self.n_components = n_components
        self.refit_period = refit_period
        self.buffer_size = buffer_size

    def observe(self, raw) -> None:
        """Append raw feature rows, keeping only the most recent ones."""
        raw = as_float_matrix(raw, "raw features")
        buffer = getattr(self, "buffer_", None)
        if buffer is None:
            buffer = raw.copy()
        else:
            buffer = np.concatenate([buffer, raw])
        self.buffer_ = buffer[-self.buffer_size :]

    def fit(self, X=None, y=None):
        """Recompute the projection from ``X`` (default: the buffer)."""
        if X is None:
            X = getattr(self, "buffer_", None)
            if X is None:
                raise ValueError("no buffered features to fit on")
        X = as_float_matrix(X, "raw features")
        check_finite(X, "raw features")
        c = check_positive_int(self.n_components, "n_components")
        if X.shape[1] < c:
            raise ValueError(
                f"raw feature width {X.shape[1]} is below n_components {c}"
            )
        if len(X) < c:
            raise ValueError(
                f"need at least {c} feature rows to fit, got {len(X)}"
            )
        self.mean_ = X.mean(axis=0)
        centered = X - self.mean_
        _, singular, vt = np.linalg.svd(centered, full_matrices=True)
        tol = singular.max(initial=0.0) * max(X.shape) * np.finfo(float).eps
        rank = int((singular > tol).sum())
        if rank < c:
            logger.warning(
                "feature buffer has rank %d < %d components; "
                "padding with an arbitrary orthonormal completion",
                rank,
                c,
            )
        self.components_ = vt[:c].copy()
        self.rank_ = rank
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "components_"):
            raise NotFittedError("TrajectoryPCA must be fit before transform")
        X = as_float_matrix(X, "raw features")
        return (X - self.mean_) @ self.components_.T


def learned_maze_task(
    layout=None,
    n_raw_samples=16,
    n_components=10,
    refit_period=50,
    buffer_size=2048,
) -> Task:
    """Maze task whose descriptors are a learned linear trajectory embedding.

    Evaluation emits the raw flattened trajectory sample; the search loop
    projects it through a :class:`TrajectoryPCA` model that is refit every
    ``refit_period`` generations, re-encoding the whole population each time.
    The descriptor space is unbounded and drifts between refits.
    """
    base = maze_task(layout=layout, descriptor_mode="trajectory", n_samples=n_raw_samples)
    model = TrajectoryPCA(
        n_components=n_components,
        refit_period=refit_period,
        buffer_size=buffer_size,
    )
    return Task(
        name=f"maze-learned{n_components}",
        genome_dim=base.genome_dim,
        descriptor_dim=n_components,
        evaluate=base.evaluate,
        descriptor_bounds=None,
        fitness_lower_bound=base.fitness_lower_bound,
        descriptor_model=model,
        raw_descriptor_dim=base.descriptor_dim,
    )
