import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cabs.matcore import MatrixSource, Sketch, relative_error, thin_svd
from cabs.samplers import uniform_indices
from cabs.sketchers import (
    RandomProjectionConfig,
    br_cur,
    cur_full,
    cur_to_sketch,
    nystrom,
    orthogonalize,
    pseudo_skeleton,
    random_projection_sketch,
    sample_triple,
    sketch_cur,
    stabilized_sketch,
)
from cabs.synthetic import lowrank, rbf_psd


def rank_k(m, n, k, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((m, k)) @ rng.standard_normal((k, n))


def dense_cur(C, Umid, R):
    return C @ Umid @ R


class TestSampleTriple:
    def test_intersection_is_bit_equal(self):
        A = np.random.default_rng(0).standard_normal((8, 6))
        t = sample_triple(MatrixSource(A), [5, 1], [0, 4])
        np.testing.assert_array_equal(t.W, A[np.ix_([5, 1], [0, 4])])
        np.testing.assert_array_equal(t.W, t.R[:, [0, 4]])

    def test_access_log(self):
        src = MatrixSource(np.ones((10, 9)))
        sample_triple(src, [2, 3], [7])
        assert src.row_access_log == {2, 3}
        assert src.col_access_log == {7}
        assert not src.all_accessed


class TestPseudoSkeleton:
    def test_rank_one_exact(self):
        A = np.outer([1.0, 2.0], [1.0, 1.0, 1.0])
        sk = pseudo_skeleton(sample_triple(MatrixSource(A), [0], [0]))
        np.testing.assert_allclose(sk.to_dense(), A, atol=1e-14)

    def test_zero_pivot(self):
        A = np.array([[0.0, 1.0], [1.0, 1.0]])
        sk = pseudo_skeleton(sample_triple(MatrixSource(A), [0], [0]))
        assert sk.rank == 0
        assert relative_error(MatrixSource(A), sk) == pytest.approx(1.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_rank3_exact(self, seed):
        A = rank_k(8, 7, 3, seed)
        src = MatrixSource(A)
        rng = np.random.default_rng(seed)
        t = sample_triple(src, uniform_indices(8, 3, rng), uniform_indices(7, 3, rng))
        assert relative_error(src, pseudo_skeleton(t)) < 1e-8

    def test_matches_dense_formula(self):
        A = np.random.default_rng(3).standard_normal((12, 10))
        t = sample_triple(MatrixSource(A), [0, 3, 5, 9], [1, 2, 8, 9])
        np.testing.assert_allclose(pseudo_skeleton(t).to_dense(),
                                   t.C @ np.linalg.pinv(t.W) @ t.R, atol=1e-9)


class TestStabilizedSketch:
    def test_full_sampling_collapse(self):
        W = np.random.default_rng(4).standard_normal((5, 5))
        src = MatrixSource(W)
        t = sample_triple(src, range(5), range(5))
        np.testing.assert_allclose(stabilized_sketch(t, 5, 5).to_dense(), W, atol=1e-12)

    def test_zero_singular_value_dropped(self):
        A = np.random.default_rng(5).standard_normal((10, 8))
        A[:, 3] = 0.0
        t = sample_triple(MatrixSource(A), [0, 1, 2], [1, 3, 5])
        sk = stabilized_sketch(t, 10, 8)
        assert sk.rank == 2
        assert np.all(np.isfinite(sk.U)) and np.all(np.isfinite(sk.V))

    def test_columns_unit_norm_and_scale(self):
        A = np.random.default_rng(6).standard_normal((30, 20))
        t = sample_triple(MatrixSource(A), range(0, 30, 6), range(0, 20, 4))
        sk = stabilized_sketch(t, 30, 20)
        np.testing.assert_allclose(np.linalg.norm(sk.U, axis=0), 1.0)
        np.testing.assert_allclose(np.linalg.norm(sk.V, axis=0), 1.0)
        s = np.linalg.svd(t.W, compute_uv=False)
        np.testing.assert_allclose(sk.S, s * np.sqrt(600) / 5)

    def test_spans_same_subspaces_as_pseudo_skeleton(self):
        A = rank_k(40, 30, 6, 7)
        t = sample_triple(MatrixSource(A), range(0, 36, 6), range(0, 30, 5))
        st_, ps = stabilized_sketch(t, 40, 30), pseudo_skeleton(t)
        # same column space, component by component up to scaling
        for j in range(6):
            c = st_.U[:, j] @ ps.U[:, j] / np.linalg.norm(ps.U[:, j])
            assert abs(c) == pytest.approx(1.0)

    @pytest.mark.xfail(strict=True, reason="norm-based rescaling of each component is only "
                       "approximately sigma^2 sqrt(mn)/k; exact-rank input is not reproduced")
    def test_exact_rank_recovery(self):
        A = rank_k(40, 30, 6, 8)
        src = MatrixSource(A)
        rng = np.random.default_rng(8)
        t = sample_triple(src, uniform_indices(40, 6, rng), uniform_indices(30, 6, rng))
        assert relative_error(src, stabilized_sketch(t, 40, 30)) < 1e-6

    def test_flat_error_over_rank(self):
        A = lowrank(300, 200, 10, 0.05, seed=0)
        src = MatrixSource(A)
        rng = np.random.default_rng(1)
        t = sample_triple(src, uniform_indices(300, 30, rng), uniform_indices(200, 30, rng))
        errs = [relative_error(src, stabilized_sketch(t, 300, 200, rank_r=r)) for r in range(10, 31)]
        assert errs[-1] <= 1.1 * min(errs)


class TestNystrom:
    def test_rank_one(self):
        x = np.array([1.0, -2.0, 3.0])
        A = np.outer(x, x)
        sk = nystrom(sample_triple(MatrixSource(A), [1], [1]))
        np.testing.assert_allclose(sk.to_dense(), A, atol=1e-12)

    def test_identity(self):
        src = MatrixSource(np.eye(3))
        sk = nystrom(sample_triple(src, [0], [0]))
        np.testing.assert_allclose(sk.to_dense(), np.diag([1.0, 0.0, 0.0]))
        assert relative_error(src, sk) == pytest.approx(np.sqrt(2 / 3))

    def test_rbf_sweep_nonincreasing(self):
        A = rbf_psd(100, seed=0)
        src = MatrixSource(A)
        idx = uniform_indices(100, 20, 0)
        t = sample_triple(src, idx, idx)
        errs = np.array([relative_error(src, nystrom(t, r)) for r in range(1, 21)])
        assert np.all(errs[1:] <= errs[:-1] * 1.02)

    def test_asymmetric_sampling_rejected(self):
        with pytest.raises(ValueError):
            nystrom(sample_triple(MatrixSource(np.eye(3)), [0], [1]))

    def test_equals_pseudo_skeleton_on_psd(self):
        A = rbf_psd(60, seed=1)
        idx = uniform_indices(60, 8, 2)
        t = sample_triple(MatrixSource(A), idx, idx)
        np.testing.assert_allclose(nystrom(t).to_dense(), pseudo_skeleton(t).to_dense(), atol=1e-10)


class TestBrCur:
    def test_all_indices_projector(self):
        A = np.random.default_rng(9).standard_normal((6, 5))
        src = MatrixSource(A)
        C, U, R = br_cur(src, range(6), range(5), range(6), range(5))
        np.testing.assert_allclose(dense_cur(C, U, R), A, atol=1e-8)

    def test_empty_target(self):
        with pytest.raises(ValueError):
            br_cur(MatrixSource(np.eye(3)), [0], [0], [], [0])

    @pytest.mark.parametrize("seed", range(3))
    def test_coincident_sampling_is_pseudo_skeleton(self, seed):
        A = rank_k(8, 6, 2, seed)
        src = MatrixSource(A)
        rng = np.random.default_rng(seed)
        rows, cols = uniform_indices(8, 2, rng), uniform_indices(6, 2, rng)
        C, U, R = br_cur(src, rows, cols, rows, cols)
        np.testing.assert_allclose(dense_cur(C, U, R),
                                   pseudo_skeleton(sample_triple(src, rows, cols)).to_dense(),
                                   atol=1e-8)


class TestSketchCur:
    def test_target_size(self):
        src = MatrixSource(np.random.default_rng(0).standard_normal((30, 30)))
        sketch_cur(src, [0, 1], [0, 1], 3, seed=0)
        # base rows/cols plus 6 target rows/cols
        assert len(src.row_access_log) <= 8 and len(src.row_access_log) >= 6

    def test_multiplier_one_coincident(self):
        A = np.random.default_rng(1).standard_normal((10, 9))
        src = MatrixSource(A)
        rows, cols = [1, 4, 7], [0, 2, 8]
        C, U, R = sketch_cur(src, rows, cols, 1, target_rows=rows, target_cols=cols)
        np.testing.assert_allclose(dense_cur(C, U, R),
                                   pseudo_skeleton(sample_triple(src, rows, cols)).to_dense(),
                                   atol=1e-8)

    def test_exact_rank2(self):
        A = rank_k(40, 35, 2, 3)
        src = MatrixSource(A)
        hits = 0
        for seed in range(50):
            rng = np.random.default_rng(seed)
            rows, cols = uniform_indices(40, 2, rng), uniform_indices(35, 2, rng)
            sk = cur_to_sketch(*sketch_cur(src, rows, cols, 3, seed=rng))
            hits += relative_error(src, sk) < 1e-6
        assert hits >= 45


class TestCurFull:
    def test_square_full_rank(self):
        A = np.random.default_rng(2).standard_normal((5, 5))
        src = MatrixSource(A)
        np.testing.assert_allclose(A @ cur_full(src, A, A) @ A, A, atol=1e-8)

    def test_rank_one(self):
        A = np.outer([1.0, 2.0, 3.0], [2.0, -1.0])
        U = cur_full(MatrixSource(A), A[:, [0]], A[[0], :])
        np.testing.assert_allclose(A[:, [0]] @ U @ A[[0], :], A, atol=1e-12)

    def test_beats_random_middle(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((20, 15))
        C, R = A[:, :4], A[:5, :]
        U = cur_full(MatrixSource(A), C, R)
        best = np.linalg.norm(A - C @ U @ R)
        for _ in range(100):
            X = U + rng.standard_normal(U.shape) * rng.choice([1e-3, 1e-1, 1.0])
            assert best <= np.linalg.norm(A - C @ X @ R)


class TestRandomProjection:
    def test_exact_rank(self):
        A = rank_k(60, 40, 5, 4)
        sk = random_projection_sketch(MatrixSource(A), RandomProjectionConfig(5, p=2, q=0), 0)
        assert relative_error(MatrixSource(A), sk) < 1e-8
        assert np.allclose(sk.U.T @ sk.U, np.eye(5))

    def test_power_iteration_helps(self):
        wins = 0
        for seed in range(20):
            A = lowrank(120, 90, 10, 0.3, seed=seed)
            src = MatrixSource(A)
            e0 = relative_error(src, random_projection_sketch(src, RandomProjectionConfig(10, 5, 0), seed))
            e1 = relative_error(src, random_projection_sketch(src, RandomProjectionConfig(10, 5, 1), seed))
            wins += e1 <= e0
        assert wins >= 16

    def test_full_subspace_matches_svd(self):
        A = np.random.default_rng(5).standard_normal((30, 12))
        U, S, V = thin_svd(A)
        best = np.linalg.norm(S[4:]) / np.linalg.norm(S)
        sk = random_projection_sketch(MatrixSource(A), RandomProjectionConfig(4, p=8, q=0), 1)
        assert relative_error(MatrixSource(A), sk) == pytest.approx(best, abs=1e-8)

    def test_flags_full_access(self):
        src = MatrixSource(np.eye(4))
        random_projection_sketch(src, RandomProjectionConfig(2), 0)
        assert src.all_accessed


class TestOrthogonalize:
    def test_already_orthonormal(self):
        A = np.random.default_rng(6).standard_normal((9, 7))
        U, S, V = thin_svd(A)
        out = orthogonalize(Sketch(U, S, V))
        np.testing.assert_allclose(out.S, S, atol=1e-10)
        np.testing.assert_allclose(out.to_dense(), A, atol=1e-10)

    def test_scale_shuffle(self):
        A = np.random.default_rng(7).standard_normal((9, 7))
        U, S, V = thin_svd(A)
        out = orthogonalize(Sketch(2 * U, S / 2, V))
        np.testing.assert_allclose(out.S, S, atol=1e-10)
        np.testing.assert_allclose(out.to_dense(), A, atol=1e-10)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 5))
    @settings(max_examples=40, deadline=None)
    def test_random_sketch(self, seed, r):
        rng = np.random.default_rng(seed)
        sk = Sketch(rng.standard_normal((12, r)), np.sort(rng.random(r))[::-1],
                    rng.standard_normal((9, r)))
        out = orthogonalize(sk)
        np.testing.assert_allclose(out.U.T @ out.U, np.eye(r), atol=1e-10)
        np.testing.assert_allclose(out.V.T @ out.V, np.eye(r), atol=1e-10)
        np.testing.assert_allclose(out.to_dense(), sk.to_dense(), atol=1e-10)
        assert out.orthonormal
