"""Distance kernels, nearest-neighbour queries and centroid construction.

Everything here is exact: distances come from explicit coordinate
differences (no dot-product expansion), nearest-neighbour ties break by
lower index, and centroid construction is plain Lloyd iteration on a
uniform sample of the bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import (
    as_bounds,
    as_float_matrix,
    check_finite,
    check_positive_int,
)

# cap on the (rows, cols, dim) difference buffer used by pairwise_distances;
# sized to keep the temporary inside the cache hierarchy
_CHUNK_ELEMENTS = 1_500_000

_PROVENANCES = ("cvt", "random", "data-driven")


@dataclass(frozen=True)
class CentroidSet:
    """A fixed set of points partitioning a descriptor space into cells.

    ``energies`` is only populated by :func:`cvt_centroids` and records the
    quantization energy after each Lloyd iteration.
    """

    points: np.ndarray
    provenance: str
    seed: int | None = None
    energies: np.ndarray | None = None

    def __post_init__(self):
        points = as_float_matrix(self.points, "centroid points")
        check_finite(points, "centroid points")
        if len(points) < 1:
            raise ValueError("a centroid set needs at least one point")
        if self.provenance not in _PROVENANCES:
            raise ValueError(
                f"provenance must be one of {_PROVENANCES}, got {self.provenance!r}"
            )
        object.__setattr__(self, "points", points)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def pairwise_distances(a, b) -> np.ndarray:
    """Euclidean distance matrix between the rows of two point sets.

    Each entry equals ``sqrt(((a[i] - b[j]) ** 2).sum())`` bit for bit; the
    computation is chunked over rows only to bound temporary memory.
    """
    a = as_float_matrix(a, "a")
    b = as_float_matrix(b, "b")
    if a.shape[1] != b.shape[1]:
        raise ValueError(
            f"dimension mismatch: a has {a.shape[1]} columns, b has {b.shape[1]}"
        )
    p, dim = a.shape
    q = b.shape[0]
    out = np.empty((p, q))
    if p == 0 or q == 0:
        return out
    step = max(1, _CHUNK_ELEMENTS // max(1, q * dim))
    for start in range(0, p, step):
        stop = min(p, start + step)
        diff = a[start:stop, None, :] - b[None, :, :]
        np.multiply(diff, diff, out=diff)
        if dim <= 2:
            # numpy sums short axes sequentially, so explicit adds in index
            # order give the same bits with far less reduction overhead
            chunk = diff[..., 0].copy() if dim == 1 else diff[..., 0] + diff[..., 1]
        else:
            chunk = diff.sum(axis=-1)
        np.sqrt(chunk, out=chunk)
        out[start:stop] = chunk
    return out


def k_nearest(descriptors, query_indices, k, eligible=None):
    """Indices and distances of the k nearest eligible points per query.

    Args:
        descriptors: (n, dim) point matrix.
        query_indices: iterable of row indices to query.
        k: neighbourhood size, at least 1.
        eligible: optional boolean mask of length n; only True rows can be
            returned as neighbours. The query point itself never is.

    Returns:
        A list, one entry per query, of ``(index, distance)`` pairs sorted
        by ascending distance with ties broken by lower index. Fewer than
        ``k`` pairs are returned when the eligible set is small.
    """
    descriptors = as_float_matrix(descriptors, "descriptors")
    check_finite(descriptors, "descriptors")
    k = check_positive_int(k, "k")
    n = len(descriptors)
    if eligible is None:
        base = np.ones(n, dtype=bool)
    else:
        base = np.asarray(eligible, dtype=bool)
        if base.shape != (n,):
            raise ValueError("eligible mask must match the number of descriptors")
    results = []
    for qi in query_indices:
        qi = int(qi)
        mask = base.copy()
        mask[qi] = False
        cand = np.flatnonzero(mask)
        if cand.size == 0:
            results.append([])
            continue
        dists = pairwise_distances(descriptors[qi : qi + 1], descriptors[cand])[0]
        order = np.lexsort((cand, dists))[:k]
        results.append([(int(cand[t]), float(dists[t])) for t in order])
    return results


def novelty_scores(descriptors, k) -> np.ndarray:
    """Mean distance from each point to its k nearest other points."""
    descriptors = as_float_matrix(descriptors, "descriptors")
    check_finite(descriptors, "descriptors")
    k = check_positive_int(k, "k")
    n = len(descriptors)
    if n < 2:
        raise ValueError("novelty requires at least two individuals")
    dist = pairwise_distances(descriptors, descriptors)
    np.fill_diagonal(dist, np.inf)
    dist.sort(axis=1)
    return dist[:, : min(k, n - 1)].mean(axis=1)


def random_centroids(n_centroids, bounds, seed) -> CentroidSet:
    """Uniformly random centroids inside a box, deterministic per seed."""
    n_centroids = check_positive_int(n_centroids, "n_centroids")
    bounds = as_bounds(bounds)
    rng = np.random.default_rng(seed)
    points = rng.uniform(bounds[:, 0], bounds[:, 1], size=(n_centroids, len(bounds)))
    return CentroidSet(points=points, provenance="random", seed=int(seed))


def data_driven_centroids(n_centroids, sample, seed) -> CentroidSet:
    """Random centroids inside the bounding box of a point sample.

    Used for descriptor spaces without declared bounds; the box is recomputed
    from whatever sample the caller provides.
    """
    sample = as_float_matrix(sample, "sample")
    check_finite(sample, "sample")
    if len(sample) == 0:
        raise ValueError("cannot derive a bounding box from an empty sample")
    bounds = np.stack([sample.min(axis=0), sample.max(axis=0)], axis=1)
    grid = random_centroids(n_centroids, bounds, seed)
    return CentroidSet(points=grid.points, provenance="data-driven", seed=int(seed))


def cvt_centroids(
    n_centroids,
    bounds,
    sample_count=None,
    lloyd_iters=100,
    seed=0,
    rel_tol=1e-9,
) -> CentroidSet:
    """Centroidal Voronoi tessellation of a box via Lloyd's algorithm.

    Runs k-means++ seeded Lloyd iteration on ``sample_count`` uniform samples
    (default ``50 * n_centroids``). The quantization energy is checked to be
    non-increasing after every iteration; empty cells are re-seeded to the
    sample currently farthest from its centroid. Iteration stops early once
    the relative energy improvement drops below ``rel_tol``.
    """
    n_centroids = check_positive_int(n_centroids, "n_centroids")
    bounds = as_bounds(bounds)
    if sample_count is None:
        sample_count = 50 * n_centroids
    sample_count = check_positive_int(sample_count, "sample_count")
    if n_centroids > sample_count:
        raise ValueError(
            f"n_centroids ({n_centroids}) exceeds sample_count ({sample_count})"
        )
    lloyd_iters = check_positive_int(lloyd_iters, "lloyd_iters")

    rng = np.random.default_rng(seed)
    samples = rng.uniform(bounds[:, 0], bounds[:, 1], size=(sample_count, len(bounds)))
    centroids = _kmeanspp_init(samples, n_centroids, rng)

    energies = []
    prev_energy = None
    for _ in range(lloyd_iters):
        dist = pairwise_distances(samples, centroids)
        assign = dist.argmin(axis=1)
        assigned_d = dist[np.arange(sample_count), assign]
        energy = float((assigned_d**2).sum())
        if prev_energy is not None and energy > prev_energy * (1 + 1e-12):
            raise AssertionError(
                f"Lloyd energy increased: {prev_energy} -> {energy}"
            )
        energies.append(energy)

        new_centroids = centroids.copy()
        for c in range(n_centroids):
            members = assign == c
            if members.any():
                new_centroids[c] = samples[members].mean(axis=0)
        # re-seed empty cells to the worst-covered sample, one at a time
        worst_d = assigned_d.copy()
        for c in np.flatnonzero(np.bincount(assign, minlength=n_centroids) == 0):
            far = int(worst_d.argmax())
            new_centroids[c] = samples[far]
            worst_d[far] = -1.0
        centroids = new_centroids

        if prev_energy is not None:
            if prev_energy - energy <= rel_tol * max(abs(prev_energy), 1e-300):
                break
        prev_energy = energy

    return CentroidSet(
        points=centroids,
        provenance="cvt",
        seed=int(seed),
        energies=np.asarray(energies),
    )


def farthest_point_indices(points, m) -> np.ndarray:
    """Greedy max-min selection of m spread-out rows, starting from row 0.

    Each step adds the point with the largest distance to the selected set,
    ties broken by lower index. Returns the selected row indices in pick
    order; if ``m`` exceeds the number of points, all indices are returned.
    """
    points = as_float_matrix(points, "points")
    check_finite(points, "points")
    m = check_positive_int(m, "m")
    n = len(points)
    if m >= n:
        return np.arange(n)
    selected = [0]
    min_dist = pairwise_distances(points, points[:1])[:, 0]
    for _ in range(m - 1):
        nxt = int(min_dist.argmax())
        selected.append(nxt)
        new_d = pairwise_distances(points, points[nxt : nxt + 1])[:, 0]
        min_dist = np.minimum(min_dist, new_d)
    return np.asarray(selected)


def _kmeanspp_init(samples, n_centroids, rng) -> np.ndarray:
    """k-means++ style seeding: sample proportionally to squared distance."""
    n = len(samples)
    chosen = np.empty(n_centroids, dtype=int)
    chosen[0] = rng.integers(n)
    d2 = (pairwise_distances(samples, samples[chosen[:1]])[:, 0]) ** 2
    for i in range(1, n_centroids):
        total = d2.sum()
        if total > 0:
            chosen[i] = rng.choice(n, p=d2 / total)
        else:
            chosen[i] = rng.integers(n)
        new_d2 = (pairwise_distances(samples, samples[chosen[i] : chosen[i] + 1])[:, 0]) ** 2
        d2 = np.minimum(d2, new_d2)
    return samples[chosen].copy()
