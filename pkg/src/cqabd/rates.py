"""Achievable sum rates under Bussgang-linearised DAC quantization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ApproximationInvalid, DimensionMismatch, DomainError, NotPositiveDefinite
from .linalg import as_matrix, logdet_psd, solve_psd

__all__ = [
    "RateInputs",
    "EpsilonReport",
    "exact_cqa_rate",
    "approx_cqa_rate",
    "fr_bd_rate",
    "epsilon_report",
    "snr_max_db",
]

EPS_THRESHOLD = 0.01


@dataclass(frozen=True)
class RateInputs:
    """Operands of the rate formulas.

    ``h`` is the channel used for evaluation (the true channel in
    imperfect-CSI runs), ``p`` the assembled precoder, ``snr`` linear.
    """

    h: np.ndarray
    p: np.ndarray
    delta: float
    snr: float
    nu: int

    def __post_init__(self):
        h = as_matrix(self.h, "h")
        p = as_matrix(self.p, "p")
        if h.shape[1] != p.shape[0]:
            raise DimensionMismatch(f"h {h.shape} and p {p.shape} are incompatible")
        if not 0 < self.delta <= 1:
            raise DomainError(f"delta={self.delta} outside (0, 1]")
        if self.snr <= 0:
            raise DomainError("snr must be positive")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "p", p)

    def gram(self) -> np.ndarray:
        hp = self.h @ self.p
        m = hp @ hp.conj().T
        return 0.5 * (m + m.conj().T)


def exact_cqa_rate(inp: RateInputs) -> float:
    """``log2 det(I + d2 c M (I + (1 - d2) c M)^{-1})``, ``c = SNR/N_u``.

    ``M = (HP)(HP)^H`` and ``d2 = delta**2``. With ``delta == 1`` this is the
    unquantized MIMO rate.
    """
    M = inp.gram()
    n = M.shape[0]
    c = inp.snr / inp.nu
    d2 = inp.delta**2
    I = np.eye(n)
    X = solve_psd(I + (1.0 - d2) * c * M, M)
    A = I + d2 * c * X
    A = 0.5 * (A + A.conj().T)
    return max(0.0, logdet_psd(A))


def approx_cqa_rate(inp: RateInputs) -> float:
    """Rate with the inverse replaced by its first-order Neumann truncation.

    ``log2 det(I + (d2/N0) M - (d2 (1 - d2)/N0^2) M^2)`` with
    ``N0 = N_u / SNR``.

    Raises
    ------
    ApproximationInvalid
        If the determinant argument is not positive definite, i.e. outside
        the region where the truncation is meaningful.
    """
    M = inp.gram()
    n0 = inp.nu / inp.snr
    d2 = inp.delta**2
    A = np.eye(M.shape[0]) + (d2 / n0) * M - (d2 * (1.0 - d2) / n0**2) * (M @ M)
    A = 0.5 * (A + A.conj().T)
    try:
        return logdet_psd(A)
    except NotPositiveDefinite as exc:
        raise ApproximationInvalid("truncated rate argument is not positive definite") from exc


def fr_bd_rate(phi, omega, n0: float) -> float:
    """Full-resolution BD rate ``sum log2(1 + phi^2 w / n0)``."""
    phi = np.asarray(phi, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if phi.shape != omega.shape:
        raise DimensionMismatch("phi and omega lengths differ")
    return float(np.sum(np.log2(1.0 + phi**2 * omega / n0)))


def snr_max_db(nu: int, delta: float) -> float:
    """Largest SNR in dB with ``SNR (1 - delta^2) / N_u <= 0.01``."""
    if not 0 < delta <= 1:
        raise DomainError(f"delta={delta} outside (0, 1]")
    if delta == 1:
        return math.inf
    return 10.0 * math.log10(EPS_THRESHOLD * nu / (1.0 - delta**2))


@dataclass(frozen=True)
class EpsilonReport:
    epsilon: float
    snr_max_db: float
    within_accurate_region: bool


def epsilon_report(nu: int, snr: float, delta: float) -> EpsilonReport:
    """Norm-shrinking coefficient ``SNR (1 - delta^2) / N_u`` and SNR limit.

    At full resolution ``epsilon == 0`` and ``snr_max_db`` is ``+inf``.
    """
    if nu < 1:
        raise DomainError("nu must be >= 1")
    eps = snr * (1.0 - delta**2) / nu
    smax = snr_max_db(nu, delta)
    return EpsilonReport(epsilon=eps, snr_max_db=smax, within_accurate_region=eps <= EPS_THRESHOLD)
