import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rad.errors import DegenerateMatrixError, DimensionError
from rad.linalg import (
    gram_schmidt,
    orthonormal_basis,
    project,
    project_rows,
    soft_threshold,
    subspace_angle,
    svd,
    svt,
)

from planted import planted_low_rank


def eig_svd_oracle(M):
    """Singular triplets from the eigen-decomposition of M^T M (no SVD routine)."""
    w, V = np.linalg.eigh(M.T @ M)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    s = np.sqrt(np.clip(w, 0.0, None))
    keep = s > 1e-12 * max(s[0], 1.0)
    U = (M @ V[:, keep]) / s[keep]
    return U, s[keep], V[:, keep]


@pytest.mark.parametrize(
    "x, tau, expected",
    [(3.0, 1.0, 2.0), (-0.5, 1.0, 0.0), (-3.0, 1.0, -2.0), (0.0, 0.0, 0.0), (2.5, 0.0, 2.5)],
)
def test_soft_threshold_examples(x, tau, expected):
    assert soft_threshold(x, tau) == expected


def test_soft_threshold_elementwise_on_arrays():
    out = soft_threshold(np.array([[3.0, -0.5], [-3.0, 1.0]]), 1.0)
    np.testing.assert_array_equal(out, [[2.0, 0.0], [-2.0, 0.0]])


def test_soft_threshold_rejects_negative_tau():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


def test_svt_diagonal():
    np.testing.assert_allclose(svt(np.diag([5.0, 1.0]), 2.0), np.diag([3.0, 0.0]), atol=1e-12)


def test_svt_zero_tau_is_identity():
    M = np.random.default_rng(3).standard_normal((7, 4))
    np.testing.assert_allclose(svt(M, 0.0), M, atol=1e-10)


def test_svt_matches_eigen_oracle():
    M = np.random.default_rng(11).standard_normal((3, 3))
    U, s, V = eig_svd_oracle(M)
    expected = (U * np.maximum(s - 0.5, 0.0)) @ V.T
    np.testing.assert_allclose(svt(M, 0.5), expected, atol=1e-10)


def eig_singular_values(M):
    """All min(n, d) singular values via the smaller Gram matrix."""
    G = M.T @ M if M.shape[0] >= M.shape[1] else M @ M.T
    return np.sqrt(np.clip(np.sort(np.linalg.eigvalsh(G))[::-1], 0.0, None))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.integers(2, 8), st.floats(0.0, 3.0))
def test_svt_spectrum_is_shrunk_spectrum(seed, n, d, tau):
    M = np.random.default_rng(seed).standard_normal((n, d))
    expected = np.maximum(eig_singular_values(M) - tau, 0.0)
    out = np.linalg.svd(svt(M, tau), compute_uv=False)
    np.testing.assert_allclose(out, expected, atol=1e-8)


def test_svd_factors_contract():
    M = np.random.default_rng(5).standard_normal((30, 6))
    U, s, V = svd(M)
    assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
    np.testing.assert_allclose(U.T @ U, np.eye(6), atol=1e-10)
    np.testing.assert_allclose(V.T @ V, np.eye(6), atol=1e-10)
    assert np.linalg.norm(M - U @ np.diag(s) @ V.T) <= 1e-8 * np.linalg.norm(M)


def test_basis_of_repeated_row():
    A = orthonormal_basis(np.tile([1.0, 1.0, 0.0], (5, 1)))
    assert A.shape == (3, 1)
    np.testing.assert_allclose(np.abs(A[:, 0]), np.array([1, 1, 0]) / np.sqrt(2), atol=1e-12)


def test_basis_of_identity_spans_everything():
    A = orthonormal_basis(np.eye(3))
    assert A.shape == (3, 3)
    np.testing.assert_allclose(A @ A.T, np.eye(3), atol=1e-12)


def test_basis_of_rank_two_contains_rows():
    rng = np.random.default_rng(2)
    L = np.outer(rng.standard_normal(50), rng.standard_normal(10)) + np.outer(
        rng.standard_normal(50), rng.standard_normal(10)
    )
    A = orthonormal_basis(L)
    assert A.shape[1] == 2
    assert np.abs(project_rows(A, L) - L).max() <= 1e-8
    for w in L:
        assert np.linalg.norm(A @ (A.T @ w) - w) <= 1e-8


def test_basis_matches_gram_schmidt_span():
    L, _ = planted_low_rank(40, 8, 3, seed=4)
    A = orthonormal_basis(L)
    G = gram_schmidt(L, tol=1e-8)
    assert G.shape[1] == A.shape[1] == 3
    np.testing.assert_allclose(G.T @ G, np.eye(3), atol=1e-10)
    assert subspace_angle(A, G) <= 1e-8
    assert subspace_angle(G, A) <= 1e-8


def test_basis_rank_override_and_tolerance():
    rng = np.random.default_rng(8)
    L = rng.standard_normal((20, 6)) * np.array([100, 50, 10, 1e-2, 1e-3, 1e-3])
    assert orthonormal_basis(L, rank_tol=1e-2).shape[1] == 3
    assert orthonormal_basis(L, rank=2).shape[1] == 2
    assert orthonormal_basis(L).shape[1] == 6


def test_basis_of_zero_matrix_is_an_error():
    with pytest.raises(DegenerateMatrixError, match="degenerate low-rank matrix"):
        orthonormal_basis(np.zeros((4, 3)))


def test_project_examples():
    A = np.eye(3)[:, :2]
    np.testing.assert_array_equal(project(A, np.array([1.0, 2.0, 3.0])), [1.0, 2.0, 0.0])
    x_in = np.array([0.3, -2.0, 0.0])
    np.testing.assert_allclose(project(A, x_in), x_in, atol=1e-10)
    np.testing.assert_allclose(project(A, np.array([0.0, 0.0, 7.0])), np.zeros(3), atol=1e-12)


def test_project_dimension_mismatch():
    with pytest.raises(DimensionError):
        project(np.eye(3)[:, :2], np.ones(4))


def _random_basis(seed, d=12, r=4):
    return orthonormal_basis(np.random.default_rng(seed).standard_normal((r, d)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
def test_projection_properties(seed, alpha, beta):
    rng = np.random.default_rng(seed)
    A = _random_basis(seed % 97)
    x, y = rng.standard_normal((2, A.shape[0])) * 10
    p = project(A, x)
    np.testing.assert_allclose(project(A, p), p, atol=1e-10)
    assert np.linalg.norm(p) <= np.linalg.norm(x) + 1e-10
    np.testing.assert_allclose(
        project(A, alpha * x + beta * y), alpha * p + beta * project(A, y), atol=1e-9
    )
    assert np.linalg.norm(A.T @ A - np.eye(A.shape[1])) <= 1e-9


def test_subspace_angle_known_value():
    A = np.array([[1.0], [0.0]])
    t = 0.3
    B = np.array([[np.cos(t)], [np.sin(t)]])
    assert subspace_angle(A, B) == pytest.approx(t, abs=1e-12)
    assert subspace_angle(np.eye(3)[:, :2], np.eye(3)[:, :1]) == pytest.approx(np.pi / 2)
