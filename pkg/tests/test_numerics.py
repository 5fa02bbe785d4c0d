import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import jacobi_svd, naive_matmul
from sketchkit.numerics import (
    NotPositiveDefiniteError,
    ShapeError,
    cholesky,
    make_rng,
    matmul,
    spd_inverse,
    truncated_svd,
)


def random_spd(n, rng):
    b = rng.standard_normal((n, n))
    return b.T @ b + np.eye(n)


def rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


class TestMatmul:
    def test_identity(self):
        a = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.array_equal(matmul(np.eye(2), a), a)

    def test_hand_arithmetic(self):
        assert np.array_equal(matmul([[1, 2], [3, 4]], [[1], [1]]), [[3], [7]])

    def test_against_triple_loop(self):
        rng = make_rng(5)
        a, b = rng.standard_normal((5, 7)), rng.standard_normal((7, 3))
        np.testing.assert_allclose(matmul(a, b), naive_matmul(a, b), atol=1e-12, rtol=0)

    def test_mismatch_names_both_shapes(self):
        with pytest.raises(ShapeError, match="2x3.*2x2"):
            matmul(np.ones((2, 3)), np.ones((2, 2)))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            matmul([[np.nan]], [[1.0]])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))
    def test_associativity(self, seed, n, m, p, q):
        rng = make_rng(seed)
        a, b, c = rng.standard_normal((n, m)), rng.standard_normal((m, p)), rng.standard_normal((p, q))
        left = matmul(matmul(a, b), c)
        right = matmul(a, matmul(b, c))
        assert np.linalg.norm(left - right) <= 1e-9 * max(np.linalg.norm(left), 1e-300)


class TestCholesky:
    def test_diagonal(self):
        np.testing.assert_array_equal(cholesky(4 * np.eye(3)), 2 * np.eye(3))

    def test_two_by_two(self):
        u = cholesky([[4.0, 2.0], [2.0, 3.0]], upper=True)
        np.testing.assert_allclose(u, [[2, 1], [0, np.sqrt(2)]], atol=1e-15)

    def test_lower(self):
        a = random_spd(5, make_rng(1))
        low = cholesky(a, upper=False)
        assert np.allclose(np.triu(low, 1), 0)
        assert rel(low @ low.T, a) < 1e-9

    @pytest.mark.parametrize("n", [1, 2, 8, 17, 64])
    def test_reconstruction(self, n):
        a = random_spd(n, make_rng(n))
        u = cholesky(a)
        assert np.allclose(np.tril(u, -1), 0)
        assert rel(u.T @ u, a) < 1e-9

    def test_not_positive_definite_reports_pivot(self):
        a = np.diag([1.0, 2.0, -1.0, 4.0])
        with pytest.raises(NotPositiveDefiniteError) as info:
            cholesky(a)
        assert info.value.pivot == 2
        assert "not positive definite" in str(info.value)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            cholesky([[2.0, 1.0], [0.0, 2.0]])

    def test_tiny_asymmetry_symmetrized(self):
        a = random_spd(6, make_rng(2))
        a[0, 1] += 1e-13
        u = cholesky(a)
        assert rel(u.T @ u, 0.5 * (a + a.T)) < 1e-9


class TestSpdInverse:
    def test_scalar(self):
        np.testing.assert_allclose(spd_inverse(2 * np.eye(4)), 0.5 * np.eye(4), atol=1e-15)

    def test_two_by_two(self):
        np.testing.assert_allclose(spd_inverse([[2.0, 1.0], [1.0, 2.0]]), np.array([[2, -1], [-1, 2]]) / 3, atol=1e-15)

    def test_residual(self):
        a = random_spd(6, make_rng(3))
        assert rel(a @ spd_inverse(a), np.eye(6)) < 1e-8

    def test_propagates(self):
        with pytest.raises(NotPositiveDefiniteError):
            spd_inverse(np.diag([1.0, 0.0]))


class TestTruncatedSvd:
    def test_rank_one_exact(self):
        rng = make_rng(4)
        a = np.outer(rng.standard_normal(6), rng.standard_normal(5))
        u, s, v = truncated_svd(a, 1)
        assert np.linalg.norm(a - (u * s) @ v.T) < 1e-10

    def test_diagonal(self):
        u, s, v = truncated_svd(np.diag([3.0, 2.0, 1.0]), 2)
        np.testing.assert_allclose(s, [3, 2])
        assert np.linalg.norm(np.diag([3.0, 2.0, 1.0]) - (u * s) @ v.T) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_matches_jacobi_tail(self):
        a = make_rng(6).standard_normal((10, 10))
        u, s, v = truncated_svd(a, 3)
        resid2 = np.linalg.norm(a - (u * s) @ v.T) ** 2
        sigma = jacobi_svd(a)
        assert resid2 == pytest.approx(np.sum(sigma[3:] ** 2), abs=1e-8)
        np.testing.assert_allclose(s, sigma[:3], atol=1e-8)

    def test_orthonormal_and_sorted(self):
        a = make_rng(7).standard_normal((9, 6))
        u, s, v = truncated_svd(a, 4)
        assert np.all(np.diff(s) <= 0)
        np.testing.assert_allclose(u.T @ u, np.eye(4), atol=1e-8)
        np.testing.assert_allclose(v.T @ v, np.eye(4), atol=1e-8)

    def test_residual_non_increasing_in_rank(self):
        a = make_rng(8).standard_normal((12, 12))
        resid = []
        for r in range(1, 13):
            u, s, v = truncated_svd(a, r)
            resid.append(np.linalg.norm(a - (u * s) @ v.T))
        assert all(b <= a_ + 1e-12 for a_, b in zip(resid, resid[1:]))

    @pytest.mark.parametrize("rank", [0, 4])
    def test_rank_out_of_range(self, rank):
        with pytest.raises(ValueError, match="rank"):
            truncated_svd(np.ones((3, 3)), rank)


def test_rng_reproducible():
    a = make_rng(2024).standard_normal(10_000)
    b = make_rng(2024).standard_normal(10_000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, make_rng(2025).standard_normal(10_000))
