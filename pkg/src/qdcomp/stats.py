"""Nonparametric comparison protocol: Mann-Whitney U with Holm correction.

The U statistic counts pairwise wins (ties count one half) and is reported
as the smaller of the two one-sided statistics. Small samples get an exact
two-sided p-value by enumerating every group assignment of the pooled
values; larger samples use the normal approximation with tie and continuity
corrections.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._validation import as_float_vector, check_finite

# exact enumeration is used when both samples are at most this size
_EXACT_LIMIT = 8


@dataclass(frozen=True)
class ComparisonResult:
    label: str
    u_statistic: float
    p_value: float
    significant: bool
    alpha: float


def _u_statistic(a, b) -> float:
    """Smaller-side U: pairwise wins of each sample, ties counting 0.5."""
    wins_a = 0.0
    for x in a:
        wins_a += float((x > b).sum()) + 0.5 * float((x == b).sum())
    return min(wins_a, len(a) * len(b) - wins_a)


def mann_whitney_u(a, b) -> tuple[float, float]:
    """Two-sided Mann-Whitney U test.

    Returns ``(U, p)`` with ``U = min(U_a, U_b)``. For samples of at most
    8 each, the p-value is exact: the fraction of all ``C(n+m, n)`` group
    assignments of the pooled values whose U is at least as extreme. Larger
    samples use the tie-corrected normal approximation with a continuity
    correction.
    """
    a = check_finite(as_float_vector(a, "a"), "a")
    b = check_finite(as_float_vector(b, "b"), "b")
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be non-empty")
    u_obs = _u_statistic(a, b)
    if len(a) <= _EXACT_LIMIT and len(b) <= _EXACT_LIMIT:
        p = _exact_two_sided_p(a, b, u_obs)
    else:
        p = _normal_two_sided_p(a, b, u_obs)
    return u_obs, p


def _exact_two_sided_p(a, b, u_obs) -> float:
    pooled = np.concatenate([a, b])
    n = len(a)
    total = 0
    at_least_as_extreme = 0
    # half-integer U values make a small epsilon safe for the comparison
    threshold = u_obs + 1e-9
    for subset in itertools.combinations(range(len(pooled)), n):
        group_a = pooled[list(subset)]
        mask = np.ones(len(pooled), dtype=bool)
        mask[list(subset)] = False
        group_b = pooled[mask]
        total += 1
        if _u_statistic(group_a, group_b) <= threshold:
            at_least_as_extreme += 1
    return at_least_as_extreme / total


def _normal_two_sided_p(a, b, u_obs) -> float:
    n, m = len(a), len(b)
    big_n = n + m
    pooled = np.concatenate([a, b])
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float((tie_counts**3 - tie_counts).sum()) / (big_n * (big_n - 1))
    variance = n * m / 12.0 * ((big_n + 1) - tie_term)
    if variance <= 0:
        return 1.0
    z = (u_obs - n * m / 2.0 + 0.5) / math.sqrt(variance)
    p = 2.0 * 0.5 * math.erfc(-z / math.sqrt(2.0))
    return min(1.0, p)


def holm_bonferroni(p_values, alpha=0.05) -> np.ndarray:
    """Holm's step-down correction; returns reject flags in input order.

    The sorted p-values are compared against ``alpha / (m - i + 1)``
    (inclusive at the boundary) and the procedure stops at the first
    failure.
    """
    p_values = as_float_vector(p_values, "p_values")
    if np.any(p_values < 0) or np.any(p_values > 1) or np.isnan(p_values).any():
        raise ValueError("p-values must lie in [0, 1]")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    m = len(p_values)
    reject = np.zeros(m, dtype=bool)
    order = np.argsort(p_values, kind="stable")
    for rank, idx in enumerate(order):
        if p_values[idx] <= alpha / (m - rank):
            reject[idx] = True
        else:
            break
    return reject


def pairwise_comparisons(groups: dict, alpha=0.05) -> list[ComparisonResult]:
    """All pairwise Mann-Whitney tests across labelled sample groups,
    Holm-corrected as one family. Groups are compared in label order."""
    labels = list(groups)
    if len(labels) < 2:
        raise ValueError("need at least two groups to compare")
    pairs = list(itertools.combinations(labels, 2))
    stats = [mann_whitney_u(groups[x], groups[y]) for x, y in pairs]
    rejected = holm_bonferroni([p for _, p in stats], alpha=alpha)
    return [
        ComparisonResult(
            label=f"{x} vs {y}",
            u_statistic=u,
            p_value=p,
            significant=bool(flag),
            alpha=alpha,
        )
        for (x, y), (u, p), flag in zip(pairs, stats, rejected)
    ]
