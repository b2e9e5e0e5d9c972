"""Tests for subspace extraction, alignment, and the perturbation bound."""

import numpy as np
import pytest

from relurec.subspace import (
    RankDeficiencyWarning,
    alignment_error_bound,
    procrustes_align,
    sin_theta_distance,
    truncated_svd,
)


def random_orthonormal(d, k, rng):
    Q, R = np.linalg.qr(rng.standard_normal((d, k)))
    return Q * np.sign(np.diag(R))


@pytest.fixture
def rng():
    return np.random.default_rng(42)


class TestTruncatedSvd:
    def test_diagonal_matrix(self):
        M = np.diag([3.0, 1.0])
        U, S, V = truncated_svd(M, 1)
        np.testing.assert_allclose(S, [3.0])
        assert abs(U[0, 0]) == pytest.approx(1.0) and U[1, 0] == pytest.approx(0.0)

    def test_rank_one_outer_product(self, rng):
        u = rng.standard_normal(8)
        u /= np.linalg.norm(u)
        v = rng.standard_normal(5)
        M = np.outer(u, 2.5 * v / np.linalg.norm(v))
        U, S, V = truncated_svd(M, 1)
        assert S[0] == pytest.approx(2.5, abs=1e-10)
        np.testing.assert_allclose(np.abs(U[:, 0] @ u), 1.0, atol=1e-10)

    def test_residual_matches_spectral_tail(self, rng):
        M = rng.standard_normal((20, 30))
        k = 5
        U, S, V = truncated_svd(M, k)
        residual = np.linalg.norm(M - U @ np.diag(S) @ V.T, ord=2)
        full = np.linalg.svd(M, compute_uv=False)
        assert residual == pytest.approx(full[k], abs=1e-8)

    def test_orthonormal_output(self, rng):
        M = rng.standard_normal((15, 10))
        U, S, V = truncated_svd(M, 4)
        np.testing.assert_allclose(U.T @ U, np.eye(4), atol=1e-10)
        np.testing.assert_allclose(V.T @ V, np.eye(4), atol=1e-10)

    def test_rank_deficiency_warns(self, rng):
        u = rng.standard_normal(6)
        M = np.outer(u, rng.standard_normal(4))
        with pytest.warns(RankDeficiencyWarning):
            truncated_svd(M, 2)

    def test_bad_rank_raises(self):
        with pytest.raises(ValueError):
            truncated_svd(np.eye(3), 0)
        with pytest.raises(ValueError):
            truncated_svd(np.eye(3), 4)


class TestSinTheta:
    def test_same_subspace_is_zero(self, rng):
        U = random_orthonormal(10, 3, rng)
        # any rotation of the basis spans the same subspace
        O = random_orthonormal(3, 3, rng)
        assert sin_theta_distance(U, U @ O) == pytest.approx(0.0, abs=1e-7)

    def test_orthogonal_subspaces_reach_sqrt_k(self):
        U = np.eye(10)[:, :2]
        W = np.eye(10)[:, 4:6]
        assert sin_theta_distance(U, W) == pytest.approx(np.sqrt(2.0))

    def test_symmetry(self, rng):
        U = random_orthonormal(12, 4, rng)
        W = random_orthonormal(12, 4, rng)
        assert sin_theta_distance(U, W) == pytest.approx(sin_theta_distance(W, U), abs=1e-12)

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            sin_theta_distance(np.eye(4)[:, :2], np.eye(4)[:, :3])


class TestProcrustes:
    def test_identity_alignment(self, rng):
        U = random_orthonormal(9, 3, rng)
        O, err = procrustes_align(U, U)
        np.testing.assert_allclose(O, np.eye(3), atol=1e-10)
        assert err == pytest.approx(0.0, abs=1e-10)

    def test_undoes_a_rotation(self, rng):
        U = random_orthonormal(9, 3, rng)
        R = random_orthonormal(3, 3, rng)
        O, err = procrustes_align(U, U @ R)
        assert err == pytest.approx(0.0, abs=1e-10)
        np.testing.assert_allclose((U @ R) @ O, U, atol=1e-10)

    def test_beats_random_orthogonal_maps(self, rng):
        U = random_orthonormal(20, 4, rng)
        W = random_orthonormal(20, 4, rng)
        O, err = procrustes_align(U, W)
        np.testing.assert_allclose(O.T @ O, np.eye(4), atol=1e-10)
        for _ in range(100):
            other = random_orthonormal(4, 4, rng)
            assert err <= np.linalg.norm(U - W @ other) + 1e-12

    def test_sin_theta_never_exceeds_procrustes_error(self, rng):
        for _ in range(100):
            U = random_orthonormal(15, 3, rng)
            W = random_orthonormal(15, 3, rng)
            _, err = procrustes_align(U, W)
            assert sin_theta_distance(U, W) <= err + 1e-10


class TestAlignmentErrorBound:
    def test_formula_arithmetic(self):
        M = np.diag([4.0, 2.0, 0.0])
        E = np.zeros((3, 3))
        E[2, 2] = 0.5
        # 2^{3/2} (2*4 + 0.5) * 0.5 / (2^2 - 0^2)
        expected = 2.0**1.5 * 8.5 * 0.5 / 4.0
        assert alignment_error_bound(M, E, 2) == pytest.approx(expected, rel=1e-12)

    def test_bound_holds_for_small_perturbations(self, rng):
        A = rng.standard_normal((40, 3))
        C = rng.standard_normal((3, 60))
        M = A @ C
        for scale in (1e-3, 1e-2, 1e-1):
            E = scale * rng.standard_normal((40, 60))
            U, _, _ = truncated_svd(M, 3)
            U_hat, _, _ = truncated_svd(M + E, 3)
            _, err = procrustes_align(U, U_hat)
            assert err <= alignment_error_bound(M, E, 3) + 1e-12

    def test_no_spectral_gap_raises(self):
        M = np.eye(3)  # s_1 = s_2, so the k=1 gap vanishes
        with pytest.raises(ValueError):
            alignment_error_bound(M, np.zeros((3, 3)), 1)
