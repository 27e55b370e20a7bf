import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cqabd.errors import DimensionMismatch, NotPositiveDefinite
from cqabd.linalg import logdet_psd, solve_psd, svd
from conftest import crandn


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 8), n=st.integers(1, 8), seed=st.integers(0, 2**31))
def test_svd_reconstructs_and_is_unitary(m, n, seed):
    A = crandn(np.random.default_rng(seed), m, n)
    d = svd(A)
    assert np.allclose(d.reconstruct(), A, atol=1e-12)
    assert np.allclose(d.U.conj().T @ d.U, np.eye(m), atol=1e-12)
    assert np.allclose(d.V.conj().T @ d.V, np.eye(n), atol=1e-12)
    assert np.all(np.diff(d.S) <= 1e-12)
    assert np.all(d.S >= 0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_svd_phase_convention(seed):
    A = crandn(np.random.default_rng(seed), 4, 6)
    V = svd(A).V
    for c in range(V.shape[1]):
        col = V[:, c]
        first = col[np.argmax(np.abs(col) > 1e-12 * np.abs(col).max())]
        assert abs(first.imag) < 1e-12 and first.real >= 0


def test_svd_is_deterministic_under_phase_rotation(rng):
    A = crandn(rng, 3, 5)
    d1 = svd(A)
    d2 = svd(A * np.exp(0.7j))
    assert np.allclose(d1.S, d2.S)
    assert np.allclose(d1.V[:, 3:] @ d1.V[:, 3:].conj().T, d2.V[:, 3:] @ d2.V[:, 3:].conj().T)


def test_svd_rejects_empty():
    with pytest.raises(DimensionMismatch):
        svd(np.zeros((0, 3)))


def test_svd_rank_deficient_null_space(rng):
    B = crandn(rng, 2, 6)
    A = np.vstack([B, B[0] + 2 * B[1]])
    d = svd(A)
    assert d.S[2] < 1e-12 * d.S[0]
    assert np.linalg.norm(A @ d.V[:, 2:]) < 1e-12


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 10), seed=st.integers(0, 2**31))
def test_logdet_matches_determinant_lemma(n, seed):
    # det(I + u u^H) = 1 + |u|^2
    u = crandn(np.random.default_rng(seed), n, 1)
    A = np.eye(n) + u @ u.conj().T
    assert logdet_psd(A) == pytest.approx(np.log2(1 + np.vdot(u, u).real), rel=1e-12)


def test_logdet_matches_slogdet(rng):
    X = crandn(rng, 6, 6)
    A = X @ X.conj().T + np.eye(6)
    assert logdet_psd(A) == pytest.approx(np.linalg.slogdet(A)[1] / np.log(2), rel=1e-12)


def test_logdet_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        logdet_psd(np.diag([1.0, -1.0]))
    with pytest.raises(NotPositiveDefinite):
        logdet_psd(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_solve_psd(rng):
    X = crandn(rng, 5, 5)
    A = X @ X.conj().T + np.eye(5)
    B = crandn(rng, 5, 3)
    assert np.allclose(A @ solve_psd(A, B), B, atol=1e-12)
    with pytest.raises(DimensionMismatch):
        solve_psd(A, B[:4])
