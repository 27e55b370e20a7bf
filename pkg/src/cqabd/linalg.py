"""Dense complex linear-algebra kernel.

Matrices are plain 2-D ``numpy`` arrays of dtype ``complex128``. The
decompositions delegate to LAPACK through numpy/scipy; this module adds the
input validation, the deterministic SVD sign convention and base-2
log-determinants used by the rate formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, DimensionMismatch, NotPositiveDefinite

__all__ = [
    "SvdResult",
    "as_matrix",
    "svd",
    "logdet_psd",
    "solve_psd",
    "hermitian_error",
]

_HERMITIAN_TOL = 1e-10


def as_matrix(a, name: str = "A") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex128 array or raise ``ValueError``."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


@dataclass(frozen=True)
class SvdResult:
    """Full SVD ``A = U @ diag(S) @ V^H``.

    ``U`` is m x m, ``V`` is n x n and ``S`` holds the min(m, n) singular
    values in non-increasing order.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.S.size
        return (self.U[:, :k] * self.S) @ self.V[:, :k].conj().T


def _fix_phases(U: np.ndarray, V: np.ndarray, k: int) -> None:
    # First component of each V column with modulus above the noise floor is
    # rotated onto the positive real axis; the paired U column follows.
    n = V.shape[1]
    for c in range(n):
        col = V[:, c]
        mags = np.abs(col)
        thresh = 1e-12 * max(mags.max(), 1e-300)
        idx = int(np.argmax(mags > thresh))
        z = col[idx]
        if z == 0:
            continue
        phase = np.conj(z) / abs(z)
        V[:, c] *= phase
        if c < k:
            U[:, c] *= phase


def svd(a) -> SvdResult:
    """Full singular value decomposition with a fixed phase convention.

    For every column of ``V`` the first entry that is not numerically zero is
    real and non-negative. The same unit phase is applied to the matching
    column of ``U`` so the product is unchanged.

    Raises
    ------
    ConvergenceFailure
        If LAPACK fails to converge.
    """
    A = as_matrix(a)
    if A.size == 0:
        raise DimensionMismatch("svd of an empty matrix")
    try:
        U, S, Vh = np.linalg.svd(A, full_matrices=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ConvergenceFailure(str(exc)) from exc
    V = Vh.conj().T.copy()
    U = U.copy()
    _fix_phases(U, V, S.size)
    return SvdResult(U=U, S=S, V=V)


def hermitian_error(a: np.ndarray) -> float:
    """Relative Frobenius distance of ``a`` from its Hermitian part."""
    scale = max(1.0, float(np.linalg.norm(a)))
    return float(np.linalg.norm(a - a.conj().T)) / scale


def _cholesky(a, name: str = "A") -> np.ndarray:
    A = as_matrix(a, name)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {A.shape}")
    if hermitian_error(A) > _HERMITIAN_TOL:
        raise NotPositiveDefinite(f"{name} is not Hermitian")
    try:
        L = np.linalg.cholesky(0.5 * (A + A.conj().T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{name} is not positive definite") from exc
    if np.any(L.diagonal().real <= 0):
        raise NotPositiveDefinite(f"{name} has a non-positive pivot")
    return L


def logdet_psd(a) -> float:
    """log2 det(A) for Hermitian positive-definite ``A`` via Cholesky."""
    L = _cholesky(a)
    return float(2.0 * np.sum(np.log2(L.diagonal().real)))


def solve_psd(a, b) -> np.ndarray:
    """Solve ``A X = B`` for Hermitian positive-definite ``A``."""
    L = _cholesky(a)
    B = as_matrix(b, "B") if np.ndim(b) == 2 else np.asarray(b, dtype=np.complex128)
    if B.shape[0] != L.shape[0]:
        raise DimensionMismatch(f"shapes {L.shape} and {B.shape} are incompatible")
    return scipy.linalg.cho_solve((L, True), B)
