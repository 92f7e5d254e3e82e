import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cabs.samplers import (
    WeightFn,
    encoding_error,
    hard_threshold_select,
    leverage_sample,
    nearest_assignment,
    uniform_indices,
    weighted_kmeans,
    weights_from_embedding,
)


class TestWeightFn:
    def test_constant(self):
        X = np.random.default_rng(0).standard_normal((4, 3))
        np.testing.assert_array_equal(weights_from_embedding(X, WeightFn.constant()), np.ones(4))

    def test_power(self):
        X = np.array([[3.0, 4.0], [0.0, 0.0]])
        np.testing.assert_allclose(weights_from_embedding(X, WeightFn.power(2)), [25.0, 0.0])

    def test_step(self):
        np.testing.assert_array_equal(WeightFn.step(1.0)([0.5, 2.0]), [0.0, 1.0])

    def test_sigmoid_midpoint(self):
        assert WeightFn.sigmoid(3.0, 1.0)([1.0])[0] == pytest.approx(0.5)

    @pytest.mark.parametrize("text,kind", [("constant", "constant"), ("power:3", "power"),
                                           ("sigmoid:2,1", "sigmoid"), ("step:0.5", "step")])
    def test_parse(self, text, kind):
        assert WeightFn.parse(text).kind == kind

    def test_rejects_non_monotone(self):
        with pytest.raises(ValueError):
            WeightFn.power(-1)
        with pytest.raises(ValueError):
            WeightFn.sigmoid(0.0)
        with pytest.raises(ValueError):
            WeightFn.parse("cube")

    @given(st.sampled_from([WeightFn.constant(), WeightFn.power(0.5), WeightFn.power(2),
                            WeightFn.sigmoid(2, 1), WeightFn.step(1.0)]),
           arrays(np.float64, 20, elements=st.floats(0, 1e3)))
    def test_monotone_nonnegative(self, w, x):
        x = np.sort(x)
        y = w(x)
        assert np.all(y >= 0)
        assert np.all(np.diff(y) >= -1e-12)


class TestUniformIndices:
    def test_exhaustive(self):
        assert uniform_indices(5, 5, 3).indices.tolist() == [0, 1, 2, 3, 4]

    def test_deterministic(self):
        assert uniform_indices(100, 10, 7) == uniform_indices(100, 10, 7)

    def test_frequencies_binomial(self):
        counts = np.zeros(100)
        for seed in range(1, 1001):
            counts[uniform_indices(100, 10, seed).indices] += 1
        freq = counts / 1000
        sigma = np.sqrt(0.1 * 0.9 / 1000)
        assert np.all(np.abs(freq - 0.1) < 5 * sigma)

    def test_too_many(self):
        with pytest.raises(ValueError):
            uniform_indices(3, 4)


class TestNearestAssignment:
    def test_ties_go_low(self):
        X = np.array([[0.0], [1.0], [2.0]])
        np.testing.assert_array_equal(nearest_assignment(X, [0, 2]), [0, 0, 1])

    def test_representatives_map_to_themselves(self):
        X = np.random.default_rng(0).standard_normal((30, 4)) * 1e6
        reps = [3, 17, 22]
        a = nearest_assignment(X, reps)
        np.testing.assert_array_equal(a[reps], [0, 1, 2])


class TestEncodingError:
    def test_own_representative(self):
        X = np.random.default_rng(1).standard_normal((5, 2))
        assert encoding_error(X, np.arange(5), np.arange(5)) == 0.0

    def test_hand_sum(self):
        X = np.array([[0.0], [2.0]])
        assert encoding_error(X, [0], [0, 0], WeightFn.constant()) == 4.0

    @pytest.mark.parametrize("seed", range(5))
    def test_nearest_is_optimal_bruteforce(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((6, 2))
        reps = np.array([0, 4])
        best = encoding_error(X, reps, nearest_assignment(X, reps))
        for a in itertools.product(range(2), repeat=6):
            assert best <= encoding_error(X, reps, np.array(a)) + 1e-12

    def test_weighted(self):
        X = np.array([[0.0, 0.0], [3.0, 4.0]])
        assert encoding_error(X, [0], [0, 0], WeightFn.power(2)) == pytest.approx(25.0 * 25.0)

    def test_bad_assignment(self):
        with pytest.raises(ValueError):
            encoding_error(np.zeros((2, 1)), [0], [0, 1])


def best_partition_sse(x, k):
    """Exhaustive search over all labelings of 1-d points into k nonempty groups."""
    best, best_lab = np.inf, None
    for lab in itertools.product(range(k), repeat=len(x)):
        lab = np.array(lab)
        if len(set(lab.tolist())) < k:
            continue
        sse = sum(((x[lab == j] - x[lab == j].mean()) ** 2).sum() for j in range(k))
        if sse < best:
            best, best_lab = sse, lab
    return best, best_lab


class TestWeightedKmeans:
    def test_k_distinct_points(self):
        X = np.random.default_rng(0).standard_normal((4, 3))
        res = weighted_kmeans(X, 4, seed=0)
        assert res.weighted_error == 0.0
        assert sorted(res.representatives) == [0, 1, 2, 3]

    def test_two_groups_match_exhaustive_partition(self):
        x = np.array([0.0, 1.0, 2.0, 10.0, 11.0])
        _, lab = best_partition_sse(x, 2)
        oracle = {frozenset(np.flatnonzero(lab == j).tolist()) for j in range(2)}
        for seed in range(10):
            res = weighted_kmeans(x[:, None], 2, seed=seed)
            got = {frozenset(np.flatnonzero(res.assignment == j).tolist()) for j in range(2)}
            assert got == oracle == {frozenset({0, 1, 2}), frozenset({3, 4})}

    def test_zero_weight_points_do_not_count(self):
        rng = np.random.default_rng(2)
        X = np.vstack([rng.standard_normal((20, 2)), rng.standard_normal((5, 2)) * 50])
        w = np.r_[np.ones(20), np.zeros(5)]
        res = weighted_kmeans(X, 3, seed=1, weights=w)
        X2 = X.copy()
        X2[20:] = rng.standard_normal((5, 2)) * 50
        diff = X - X[res.representatives.indices[res.assignment]]
        assert res.weighted_error == pytest.approx(np.dot(w, (diff ** 2).sum(1)))
        # moving weightless points leaves the objective of a fixed assignment unchanged
        diff2 = X2 - X[res.representatives.indices[res.assignment]]
        assert np.dot(w, (diff2 ** 2).sum(1)) == pytest.approx(res.weighted_error)

    def test_representatives_distinct_and_in_sample(self):
        X = np.random.default_rng(3).standard_normal((200, 5))
        res = weighted_kmeans(X, 25, WeightFn.power(2), iters=5, seed=4)
        idx = res.representatives.indices
        assert len(set(idx.tolist())) == 25
        np.testing.assert_array_equal(res.centers, X[idx])
        np.testing.assert_array_equal(res.assignment, nearest_assignment(X, idx))

    def test_deterministic(self):
        X = np.random.default_rng(5).standard_normal((50, 3))
        a = weighted_kmeans(X, 6, seed=9)
        b = weighted_kmeans(X, 6, seed=9)
        assert a.representatives == b.representatives

    def test_too_few_points(self):
        X = np.array([[0.0], [0.0], [1.0]])
        with pytest.raises(ValueError, match="distinct"):
            weighted_kmeans(X, 3)
        with pytest.raises(ValueError, match="nonzero weight"):
            weighted_kmeans(np.array([[0.0], [1.0], [2.0]]), 3, weights=[1.0, 1.0, 0.0])

    @given(st.integers(0, 2**32 - 1), st.integers(1, 6))
    @settings(max_examples=40, deadline=None)
    def test_lloyd_objective_nonincreasing(self, seed, k):
        X = np.random.default_rng(seed).standard_normal((30, 2))
        res = weighted_kmeans(X, k, WeightFn.power(1), iters=6, seed=seed)
        h = np.array(res.objective_history)
        assert np.all(np.diff(h) <= 1e-9 * max(h[0], 1.0))


class TestLeverageSample:
    def test_basis_rows(self):
        F = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        assert leverage_sample(F, 2, seed=0).indices.tolist() == [0, 1]

    def test_fill_when_few_nonzero(self):
        F = np.array([[1.0], [0.0], [0.0], [0.0]])
        idx = leverage_sample(F, 3, seed=0).indices
        assert 0 in idx and len(idx) == 3

    def test_multinomial_frequencies(self):
        h = np.sqrt(0.5)
        F = np.array([[1.0, 0.0], [0.0, h], [0.0, h]])
        p = np.array([0.5, 0.25, 0.25])
        counts = np.zeros(3)
        for seed in range(1000):
            counts[leverage_sample(F, 1, seed=seed).indices] += 1
        sigma = np.sqrt(p * (1 - p) / 1000)
        assert np.all(np.abs(counts / 1000 - p) < 5 * sigma)

    def test_equal_scores_uniform(self):
        F = np.linalg.qr(np.random.default_rng(0).standard_normal((8, 8)))[0]
        counts = np.zeros(8)
        for seed in range(800):
            counts[leverage_sample(F, 2, seed=seed).indices] += 1
        sigma = np.sqrt(0.25 * 0.75 / 800)
        assert np.all(np.abs(counts / 800 - 0.25) < 5 * sigma)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError, match="orthonormal"):
            leverage_sample(np.ones((4, 2)), 2)


class TestHardThreshold:
    def test_basic(self):
        assert hard_threshold_select([5.0, 1.0, 3.0], 2).indices.tolist() == [0, 2]

    def test_ties(self):
        assert hard_threshold_select(np.ones(5), 2).indices.tolist() == [0, 1]

    @pytest.mark.parametrize("seed", range(5))
    def test_max_sum_exhaustive(self, seed):
        w = np.random.default_rng(seed).random(9)
        got = w[hard_threshold_select(w, 4).indices].sum()
        best = max(w[list(c)].sum() for c in itertools.combinations(range(9), 4))
        assert got == pytest.approx(best)
