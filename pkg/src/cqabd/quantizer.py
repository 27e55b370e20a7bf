"""Uniform mid-rise DAC model and its Bussgang linearisation.

Each real dimension of a transmit antenna carries variance ``P / (2 N_b)``.
For a ``b``-bit quantizer with ``J = 2**b`` levels and step ``gamma`` the
thresholds sit at ``gamma * (l - J/2)``, ``l = 1 .. J-1``. The Bussgang
gain of the unscaled quantizer is

    g = gamma * sqrt(N_b / (pi P)) * sum_l exp(-N_b gamma**2 (l - J/2)**2 / P)

and ``alpha`` rescales the output so that its power equals ``P``. The
normalised gain ``delta = alpha * g`` is the correlation coefficient between
quantizer input and output, which is why maximising it over ``gamma`` lands
on the MSE-optimal uniform step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr

from .channel import complex_normal, make_rng
from .errors import DomainError, SearchFailure
from .linalg import as_matrix

__all__ = [
    "QuantizerSpec",
    "BussgangStats",
    "full_resolution",
    "bussgang_terms",
    "build_quantizer",
    "quantize",
    "verify_bussgang",
]

FR = None  # bits value used for the full-resolution sentinel


@dataclass(frozen=True)
class QuantizerSpec:
    """Bit depth, step, normalisation and Bussgang gain of one DAC design.

    ``b is None`` marks the full-resolution sentinel (``delta == 1``).
    """

    b: int | None
    j_levels: int | None
    gamma: float
    alpha: float
    delta: float
    nb: int
    p_total: float

    @property
    def is_full_resolution(self) -> bool:
        return self.b is None

    @property
    def label(self) -> str:
        return "FR" if self.b is None else f"{self.b}b"


@dataclass(frozen=True)
class BussgangStats:
    cross_corr_norm: float
    rff_error: float
    samples: int
    reference_norm: float = 0.0
    rff_diag_error: float = 0.0


def full_resolution(nb: int, p_total: float) -> QuantizerSpec:
    return QuantizerSpec(b=None, j_levels=None, gamma=0.0, alpha=1.0, delta=1.0,
                         nb=nb, p_total=p_total)


def _offsets(j_levels: int) -> np.ndarray:
    return np.arange(1, j_levels) - j_levels / 2.0


def bussgang_terms(b: int, gamma: float, nb: int, p_total: float) -> tuple[float, float]:
    """``(alpha, delta)`` for a given step ``gamma``."""
    J = 2 ** b
    k = _offsets(J)
    # mean power of one unscaled real output, in units of gamma**2
    cdf = ndtr(math.sqrt(2.0 * nb / p_total) * gamma * k)
    second_moment = ((J - 1) / 2.0) ** 2 - 2.0 * np.sum(k * cdf)
    alpha = (2.0 * nb * gamma**2 * second_moment / p_total) ** -0.5
    gain = gamma * math.sqrt(nb / (math.pi * p_total)) * np.sum(
        np.exp(-nb * gamma**2 * k**2 / p_total)
    )
    return float(alpha), float(alpha * gain)


def build_quantizer(b: int, nb: int, p_total: float) -> QuantizerSpec:
    """Quantizer with the step that maximises the Bussgang gain.

    Parameters
    ----------
    b : int
        Bits per real dimension, 2..12.
    nb : int
        Number of transmit antennas.
    p_total : float
        Total transmit power.
    """
    if not 2 <= b <= 12:
        raise DomainError(f"bits must lie in 2..12, got {b}")
    if nb < 1 or p_total <= 0:
        raise DomainError("nb >= 1 and p_total > 0 required")
    sigma = math.sqrt(p_total / nb)
    lo, hi = 1e-3 * sigma, 4.0 * sigma

    def neg_delta(g):
        return -bussgang_terms(b, g, nb, p_total)[1]

    # coarse log grid, then bounded refinement around the best cell
    grid = np.geomspace(lo, hi, 400)
    vals = np.array([neg_delta(g) for g in grid])
    i = int(np.argmin(vals))
    if i == 0 or i == grid.size - 1:
        raise SearchFailure(f"delta maximum for b={b} sits on the search boundary")
    res = minimize_scalar(neg_delta, bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                          options={"xatol": 1e-12 * sigma})
    if not res.success:
        raise SearchFailure(res.message)
    gamma = float(res.x)
    alpha, delta = bussgang_terms(b, gamma, nb, p_total)
    if not 0 < delta < 1:
        raise SearchFailure(f"delta={delta} outside (0, 1)")
    return QuantizerSpec(b=b, j_levels=2**b, gamma=gamma, alpha=alpha, delta=delta,
                         nb=nb, p_total=p_total)


def _quantize_real(v: np.ndarray, spec: QuantizerSpec) -> np.ndarray:
    half = spec.j_levels // 2
    idx = np.clip(np.floor(v / spec.gamma), -half, half - 1)
    return spec.gamma * (idx + 0.5)


def quantize(x, spec: QuantizerSpec) -> np.ndarray:
    """Apply the scaled mid-rise quantizer to real and imaginary parts.

    Zero maps to ``+alpha*gamma/2``; inputs beyond the outer thresholds
    saturate at ``+-alpha*gamma*(J-1)/2``. The full-resolution sentinel is
    the identity.
    """
    x = np.asarray(x, dtype=np.complex128)
    if spec.is_full_resolution:
        return x.copy()
    return spec.alpha * (_quantize_real(x.real, spec) + 1j * _quantize_real(x.imag, spec))


def verify_bussgang(spec: QuantizerSpec, precoder_matrix, n_samples: int, seed,
                    block: int = 20000) -> BussgangStats:
    """Monte Carlo check of the Bussgang decomposition ``Q(Ps) = delta Ps + f``.

    Returns the Frobenius norm of the sample cross-correlation ``E[f s^H]``
    and the relative Frobenius error of the sample ``E[f f^H]`` against
    ``(1 - delta**2) P P^H``. ``reference_norm`` is ``||delta P||_F`` so
    callers can express the cross-correlation relative to the signal scale.
    """
    P = as_matrix(precoder_matrix, "P")
    nb, nu = P.shape
    rng = make_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    cross = np.zeros((nb, nu), dtype=np.complex128)
    rff = np.zeros((nb, nb), dtype=np.complex128)
    done = 0
    while done < n_samples:
        m = min(block, n_samples - done)
        s = complex_normal(rng, (nu, m))
        x = P @ s
        f = quantize(x, spec) - spec.delta * x
        cross += f @ s.conj().T
        rff += f @ f.conj().T
        done += m
    cross /= n_samples
    rff /= n_samples
    model = (1.0 - spec.delta**2) * (P @ P.conj().T)
    model_norm = float(np.linalg.norm(model))
    rff_err = 0.0 if model_norm == 0 else float(np.linalg.norm(rff - model)) / model_norm
    # diagonal-only comparison: per-antenna distortion power
    d_model = np.real(np.diag(model))
    d_norm = float(np.linalg.norm(d_model))
    diag_err = 0.0 if d_norm == 0 else float(np.linalg.norm(np.real(np.diag(rff)) - d_model)) / d_norm
    return BussgangStats(
        cross_corr_norm=float(np.linalg.norm(cross)),
        rff_error=rff_err,
        samples=n_samples,
        reference_norm=float(np.linalg.norm(spec.delta * P)),
        rff_diag_error=diag_err,
    )
