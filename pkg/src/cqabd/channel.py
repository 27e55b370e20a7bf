"""Multi-user Rayleigh channels, transmit correlation and CSI error."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import IndexOutOfRange, InvalidDimensions, NotPositiveSemidefinite

__all__ = [
    "ChannelSet",
    "CsiModel",
    "make_rng",
    "complex_normal",
    "generate_iid",
    "correlation_matrix",
    "hermitian_sqrt",
    "apply_csi_model",
    "exclude_user",
    "user_block",
    "write_matrix",
    "read_matrix",
]


def make_rng(seed, *keys: int) -> np.random.Generator:
    """Independent PCG64 stream for ``seed`` and an optional key path.

    Keys are e.g. ``(trial, purpose)`` so that every work unit owns its own
    stream regardless of the order in which units are executed.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def complex_normal(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric CN(0, variance) samples."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class ChannelSet:
    """Stacked channel ``H`` (N_u x N_b) with its per-user row partition."""

    H: np.ndarray
    partition: tuple[int, ...]
    seed: int | None = None
    csi: "CsiModel | None" = field(default=None)

    def __post_init__(self):
        H = np.asarray(self.H, dtype=np.complex128)
        if H.ndim != 2:
            raise InvalidDimensions("H must be 2-D")
        part = tuple(int(p) for p in self.partition)
        if any(p < 1 for p in part):
            raise InvalidDimensions("every user needs at least one antenna")
        if sum(part) != H.shape[0]:
            raise InvalidDimensions(
                f"partition {part} does not sum to {H.shape[0]} rows"
            )
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "partition", part)

    @property
    def nb(self) -> int:
        return self.H.shape[1]

    @property
    def nu(self) -> int:
        return self.H.shape[0]

    @property
    def k(self) -> int:
        return len(self.partition)

    def offsets(self) -> list[int]:
        return [0] + list(np.cumsum(self.partition))

    def with_matrix(self, H: np.ndarray, **kw) -> "ChannelSet":
        return ChannelSet(H=H, partition=self.partition, seed=kw.get("seed", self.seed),
                          csi=kw.get("csi", self.csi))


@dataclass(frozen=True)
class CsiModel:
    """Transmit correlation coefficient ``r`` and CSI error variance."""

    r: complex = 0.0
    sigma_e2: float = 0.0

    def __post_init__(self):
        if abs(self.r) >= 1:
            raise ValueError("correlation coefficient must satisfy |r| < 1")
        if self.sigma_e2 < 0:
            raise ValueError("sigma_e2 must be non-negative")


def generate_iid(nb: int, partition: Sequence[int], seed) -> ChannelSet:
    """I.i.d. CN(0, 1) channel for the given user partition."""
    partition = tuple(int(p) for p in partition)
    nu = sum(partition)
    if nb < nu:
        raise InvalidDimensions(f"need nb >= sum(partition), got {nb} < {nu}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    H = complex_normal(rng, (nu, nb))
    return ChannelSet(H=H, partition=partition,
                      seed=None if isinstance(seed, np.random.Generator) else int(seed))


def correlation_matrix(nb: int, r: complex) -> np.ndarray:
    """Conjugate-Toeplitz matrix with ``R[i, j] = r**(j-i)`` for ``i <= j``."""
    idx = np.arange(nb)
    d = idx[None, :] - idx[:, None]
    R = np.where(d >= 0, np.power(complex(r), np.abs(d)), np.conj(np.power(complex(r), np.abs(d))))
    return R.astype(np.complex128)


def hermitian_sqrt(R: np.ndarray, neg_tol: float = 1e-12) -> np.ndarray:
    """Hermitian PSD square root; eigenvalues in [-neg_tol, 0] are clamped."""
    w, V = np.linalg.eigh(0.5 * (R + R.conj().T))
    if np.any(w < -neg_tol):
        raise NotPositiveSemidefinite(f"min eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)
    return (V * np.sqrt(w)) @ V.conj().T


def apply_csi_model(ch: ChannelSet, model: CsiModel, seed) -> ChannelSet:
    """Corrupted estimate ``H R^{1/2} + E`` with ``E ~ CN(0, sigma_e2)``."""
    H = ch.H
    if model.r != 0:
        H = H @ hermitian_sqrt(correlation_matrix(ch.nb, model.r))
    else:
        H = H.copy()
    if model.sigma_e2 > 0:
        rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
        H = H + complex_normal(rng, H.shape, model.sigma_e2)
    return ChannelSet(H=H, partition=ch.partition, seed=ch.seed, csi=model)


def _check_user(ch: ChannelSet, j: int) -> None:
    if not 0 <= j < ch.k:
        raise IndexOutOfRange(f"user index {j} outside 0..{ch.k - 1}")


def user_block(ch: ChannelSet, j: int) -> np.ndarray:
    """Rows of ``H`` belonging to user ``j`` (0-based)."""
    _check_user(ch, j)
    off = ch.offsets()
    return ch.H[off[j]:off[j + 1]]


def exclude_user(ch: ChannelSet, j: int) -> np.ndarray:
    """Stack of all users' rows except user ``j`` (0-based), original order.

    For a single-user channel the result is an empty ``0 x N_b`` matrix.
    """
    _check_user(ch, j)
    off = ch.offsets()
    return np.vstack([ch.H[:off[j]], ch.H[off[j + 1]:]])


def write_matrix(path, H: np.ndarray) -> None:
    """Text format: ``rows cols`` header then one ``re im`` line per entry."""
    H = np.asarray(H, dtype=np.complex128)
    lines = [f"{H.shape[0]} {H.shape[1]}"]
    lines += [f"{z.real:.17g} {z.imag:.17g}" for z in H.ravel()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path) -> np.ndarray:
    text = Path(path).read_text().split()
    rows, cols = int(text[0]), int(text[1])
    vals = np.array(text[2:], dtype=float)
    if vals.size != 2 * rows * cols:
        raise InvalidDimensions(f"{path}: expected {rows * cols} entries")
    z = vals[0::2] + 1j * vals[1::2]
    return z.reshape(rows, cols)
