import numpy as np
import pytest

from qdcomp import holm_bonferroni, mann_whitney_u, pairwise_comparisons
from oracles import mann_whitney_exact_oracle


class TestMannWhitneyU:
    def test_perfect_separation(self):
        u, p = mann_whitney_u([1, 2, 3], [4, 5, 6])
        assert u == 0.0
        assert p == pytest.approx(0.1, abs=1e-12)

    def test_identical_samples(self):
        u, p = mann_whitney_u([1, 2, 3], [1, 2, 3])
        assert u == 4.5
        assert p >= 0.99

    def test_interleaved_hand_count(self):
        u, _ = mann_whitney_u([1, 3], [2, 4])
        assert u == 1.0

    def test_empty_sample_rejected(self):
        with pytest.raises(ValueError, match="non-empty"):
            mann_whitney_u([], [1.0])

    def test_exact_matches_independent_enumeration(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 6))
            m = int(rng.integers(1, 6))
            a = rng.integers(0, 5, size=n).astype(float)
            b = rng.integers(0, 5, size=m).astype(float)
            u, p = mann_whitney_u(a, b)
            u_ref, p_ref = mann_whitney_exact_oracle(a, b)
            assert u == u_ref
            assert p == pytest.approx(p_ref, abs=1e-12)

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=7)
        b = rng.normal(size=5)
        u, p = mann_whitney_u(a, b)
        u2, p2 = mann_whitney_u(np.exp(a), np.exp(b))
        assert u == u2 and p == p2

    def test_normal_approximation_sanity_band(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            a = rng.normal(size=8)
            b = rng.normal(size=8)
            _, p_exact = mann_whitney_u(a, b)
            # recompute via the normal path by padding sizes over the limit
            from qdcomp.stats import _normal_two_sided_p, _u_statistic

            p_norm = _normal_two_sided_p(a, b, _u_statistic(a, b))
            assert abs(p_exact - p_norm) < 0.05

    def test_large_samples_use_normal_path(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=30)
        b = rng.normal(size=30) + 2.0
        _, p = mann_whitney_u(a, b)
        assert p < 0.001

    def test_all_tied_large_samples(self):
        _, p = mann_whitney_u([1.0] * 12, [1.0] * 12)
        assert p == 1.0


class TestHolmBonferroni:
    def test_both_rejected(self):
        assert holm_bonferroni([0.01, 0.04], alpha=0.05).tolist() == [True, True]

    def test_first_failure_stops(self):
        assert holm_bonferroni([0.03, 0.04], alpha=0.05).tolist() == [False, False]

    def test_boundary_inclusive(self):
        assert holm_bonferroni([0.05], alpha=0.05).tolist() == [True]

    def test_flags_in_original_order(self):
        flags = holm_bonferroni([0.2, 0.001, 0.01], alpha=0.05)
        assert flags.tolist() == [False, True, True]

    def test_invalid_p_rejected(self):
        with pytest.raises(ValueError):
            holm_bonferroni([1.5], alpha=0.05)
        with pytest.raises(ValueError):
            holm_bonferroni([np.nan], alpha=0.05)

    def test_invalid_alpha_rejected(self):
        with pytest.raises(ValueError):
            holm_bonferroni([0.01], alpha=0.0)

    def test_lowering_a_p_never_removes_rejections(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            pvals = rng.uniform(size=5)
            base = holm_bonferroni(pvals, alpha=0.05)
            idx = int(rng.integers(5))
            lowered = pvals.copy()
            lowered[idx] = pvals[idx] * rng.uniform()
            updated = holm_bonferroni(lowered, alpha=0.05)
            keep = np.ones(5, dtype=bool)
            keep[idx] = False
            assert np.all(updated[keep] >= base[keep])


class TestPairwiseComparisons:
    def test_two_groups_single_comparison(self):
        rng = np.random.default_rng(5)
        groups = {"a": rng.normal(size=10), "b": rng.normal(size=10)}
        results = pairwise_comparisons(groups, alpha=0.05)
        assert len(results) == 1
        assert results[0].label == "a vs b"

    def test_four_groups_six_comparisons(self):
        rng = np.random.default_rng(6)
        groups = {name: rng.normal(size=5) for name in "abcd"}
        assert len(pairwise_comparisons(groups)) == 6

    def test_identical_groups_not_significant(self):
        sample = [1.0, 2.0, 3.0, 4.0]
        results = pairwise_comparisons({"x": sample, "y": list(sample)})
        assert results[0].p_value >= 0.99
        assert not results[0].significant

    def test_single_group_rejected(self):
        with pytest.raises(ValueError):
            pairwise_comparisons({"only": [1.0, 2.0]})
