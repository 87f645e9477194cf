"""Tests for the dense-matrix kernel."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ts_lens.errors import ShapeMismatchError, SingularSystemError
from ts_lens.numerics import center_columns, fix_signs, pca, solve_ridge, svd

seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestCenterColumns:
    def test_two_rows(self):
        np.testing.assert_array_equal(center_columns([[1.0], [3.0]]), [[-1.0], [1.0]])

    def test_zero_matrix(self):
        np.testing.assert_array_equal(center_columns(np.zeros((4, 3))), np.zeros((4, 3)))

    def test_column_sums_vanish(self):
        m = np.random.default_rng(0).standard_normal((5, 3))
        assert np.all(np.abs(center_columns(m).sum(axis=0)) < 1e-10)

    def test_rejects_nan(self):
        with pytest.raises(ValueError, match="NaN or Inf"):
            center_columns([[1.0, np.nan]])

    def test_rejects_1d(self):
        with pytest.raises(ShapeMismatchError, match="must be 2D"):
            center_columns([1.0, 2.0])


class TestSvd:
    def test_diagonal(self):
        result = svd(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(result.s, [3.0, 1.0])

    def test_rank_one(self):
        u = np.array([1.0, 2.0, 2.0])
        v = np.array([3.0, 4.0])
        result = svd(np.outer(u, v))
        assert result.s[0] == pytest.approx(np.linalg.norm(u) * np.linalg.norm(v))
        assert result.s[1] < 1e-12

    def test_reconstruction(self):
        m = np.random.default_rng(1).standard_normal((6, 4))
        r = svd(m)
        err = np.linalg.norm(r.u @ np.diag(r.s) @ r.vt - m) / np.linalg.norm(m)
        assert err < 1e-8

    @settings(max_examples=100, deadline=None)
    @given(seed=seeds, rows=st.integers(1, 16), cols=st.integers(1, 16))
    def test_contract(self, seed, rows, cols):
        m = np.random.default_rng(seed).standard_normal((rows, cols))
        r = svd(m)
        assert np.linalg.norm(r.u @ np.diag(r.s) @ r.vt - m) / np.linalg.norm(m) < 1e-8
        assert np.max(np.abs(r.u.T @ r.u - np.eye(r.u.shape[1]))) < 1e-8
        assert np.all(r.s >= 0)
        assert np.all(np.diff(r.s) <= 0)


class TestSolveRidge:
    def test_identity(self):
        np.testing.assert_allclose(solve_ridge(np.eye(3), np.eye(3), 0.0), np.eye(3))

    def test_identity_with_ridge(self):
        np.testing.assert_allclose(solve_ridge(np.eye(2), np.eye(2), 1.0), 0.5 * np.eye(2))

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(2)
        a, b = rng.standard_normal((8, 3)), rng.standard_normal((8, 2))
        expected = np.linalg.inv(a.T @ a + 0.1 * np.eye(3)) @ a.T @ b
        np.testing.assert_allclose(solve_ridge(a, b, 0.1), expected, atol=1e-8)

    def test_vector_rhs(self):
        rng = np.random.default_rng(3)
        a, b = rng.standard_normal((10, 3)), rng.standard_normal(10)
        assert solve_ridge(a, b, 0.5).shape == (3,)

    def test_singular_without_ridge(self):
        a = np.ones((4, 2))
        with pytest.raises(SingularSystemError):
            solve_ridge(a, np.ones((4, 1)), 0.0)

    def test_singular_with_ridge_is_fine(self):
        x = solve_ridge(np.ones((4, 2)), np.ones((4, 1)), 1.0)
        assert np.all(np.isfinite(x))

    def test_negative_alpha(self):
        with pytest.raises(ValueError, match="non-negative"):
            solve_ridge(np.eye(2), np.eye(2), -1.0)

    def test_row_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            solve_ridge(np.eye(3), np.eye(2), 1.0)

    @settings(max_examples=50, deadline=None)
    @given(seed=seeds, alpha1=st.floats(0.0, 10.0), delta=st.floats(1e-3, 10.0))
    def test_norm_shrinks_with_alpha(self, seed, alpha1, delta):
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal((12, 4)), rng.standard_normal((12, 2))
        small = np.linalg.norm(solve_ridge(a, b, alpha1 + delta))
        large = np.linalg.norm(solve_ridge(a, b, alpha1))
        assert small <= large * (1 + 1e-12)


class TestPca:
    def test_collinear(self):
        x = np.linspace(-1, 1, 11)
        result = pca(np.column_stack([x, 2 * x]), 1)
        np.testing.assert_allclose(result.components[0], np.array([1.0, 2.0]) / np.sqrt(5))
        assert not result.rank_deficient

    def test_collinear_flags_missing_component(self):
        x = np.linspace(-1, 1, 11)
        result = pca(np.column_stack([x, 2 * x]), 2)
        assert result.rank_deficient
        assert result.components.shape == (1, 2)

    def test_complete_variance(self):
        m = np.random.default_rng(4).standard_normal((30, 4))
        result = pca(m, 4)
        total = np.var(m, axis=0, ddof=1).sum()
        assert result.explained_variance.sum() == pytest.approx(total, abs=1e-8)

    def test_matches_covariance_eigen(self):
        m = np.random.default_rng(5).standard_normal((50, 4))
        result = pca(m, 2)
        evals, evecs = np.linalg.eigh(np.cov(m, rowvar=False))
        order = np.argsort(evals)[::-1][:2]
        np.testing.assert_allclose(result.explained_variance, evals[order], atol=1e-6)
        expected = fix_signs(evecs[:, order].T)
        np.testing.assert_allclose(result.components, expected, atol=1e-6)

    def test_projection_is_centered_product(self):
        m = np.random.default_rng(6).standard_normal((20, 3))
        result = pca(m, 2)
        np.testing.assert_allclose(result.projected, (m - m.mean(axis=0)) @ result.components.T)
        np.testing.assert_allclose(result.transform(m), result.projected)

    def test_transform_reuses_fitted_mean(self):
        rng = np.random.default_rng(8)
        m = rng.standard_normal((20, 3)) + 5.0
        result = pca(m, 2)
        np.testing.assert_allclose(result.mean, m.mean(axis=0))
        fresh = rng.standard_normal((4, 3))
        np.testing.assert_allclose(
            result.transform(fresh), (fresh - result.mean) @ result.components.T
        )

    def test_components_orthonormal(self):
        m = np.random.default_rng(7).standard_normal((20, 5))
        c = pca(m, 3).components
        np.testing.assert_allclose(c @ c.T, np.eye(3), atol=1e-10)

    def test_sign_convention(self):
        m = np.random.default_rng(8).standard_normal((20, 5))
        for row in pca(m, 3).components:
            assert row[np.argmax(np.abs(row))] > 0

    def test_invalid_k(self):
        with pytest.raises(ValueError, match="k must be in"):
            pca(np.random.default_rng(9).standard_normal((3, 5)), 3)

    @settings(max_examples=30, deadline=None)
    @given(seed=seeds)
    def test_rotation_invariant_variance(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((25, 4))
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        np.testing.assert_allclose(
            pca(m, 3).explained_variance, pca(m @ q, 3).explained_variance, atol=1e-8
        )
