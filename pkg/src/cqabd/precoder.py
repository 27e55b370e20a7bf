"""Linear multi-user precoders: ZF, MMSE, BD and regularized BD.

BD-type precoders are built in two stages. The first stage ``pc`` maps each
user into (or close to) the null space of the other users' channels; the
second stage ``pd`` diagonalises the resulting effective channel and carries
the power loading. The same construction is used for the full-resolution
and the quantization-aware variants: quantization enters only through the
Bussgang gain at evaluation and power-allocation time.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .channel import ChannelSet, exclude_user, user_block
from .errors import (BudgetExceeded, DimensionMismatch, NegativePower,
                     RankDeficiency)
from .linalg import svd

__all__ = [
    "Kind",
    "UserFactors",
    "Precoder",
    "numerical_rank",
    "build_bd",
    "build_rbd",
    "build_zf",
    "build_mmse",
    "build",
    "set_power_loading",
]

_EPS = np.finfo(float).eps


class Kind(str, Enum):
    ZF = "ZF"
    MMSE = "MMSE"
    BD = "BD"
    RBD = "RBD"


@dataclass(frozen=True)
class UserFactors:
    """Per-user factors of a precoder.

    Attributes
    ----------
    pc : ndarray
        First-stage factor, ``N_b x L_j``.
    pd : ndarray
        Second-stage factor including the power loading, ``L_j x Lambda_e``.
    phi : ndarray
        Singular values of the effective channel ``H_j @ pc``.
    w1 : ndarray
        Leading ``Lambda_e`` right singular vectors of the effective channel.
    omega : ndarray
        Per-stream transmit powers.
    colnorm : ndarray
        Column norms of ``pc @ w1``; all ones for BD. Stream ``k`` is sent
        along ``pc @ w1[:, k] / colnorm[k]`` so ``omega`` is actual power.
    """

    pc: np.ndarray
    pd: np.ndarray
    phi: np.ndarray
    w1: np.ndarray
    omega: np.ndarray
    colnorm: np.ndarray

    @property
    def gain(self) -> np.ndarray:
        """Effective amplitude gain per unit transmit power of each stream."""
        if self.phi.size == 0:
            return self.phi
        return self.phi / self.colnorm

    @property
    def n_streams(self) -> int:
        return int(self.phi.size)


@dataclass(frozen=True)
class Precoder:
    p_matrix: np.ndarray
    per_user: tuple[UserFactors, ...]
    kind: Kind
    p_total: float

    @property
    def stream_gains2(self) -> np.ndarray:
        """Squared stream gains pooled over users in user order."""
        if self.kind in (Kind.ZF, Kind.MMSE):
            return np.zeros(0)
        return np.concatenate([uf.gain**2 for uf in self.per_user])

    @property
    def stream_counts(self) -> list[int]:
        return [uf.n_streams for uf in self.per_user]

    def split(self, pooled: Sequence[float]) -> list[np.ndarray]:
        """Cut a pooled per-stream vector back into per-user pieces."""
        pooled = np.asarray(pooled, dtype=float)
        edges = np.cumsum([0] + self.stream_counts)
        return [pooled[edges[i]:edges[i + 1]] for i in range(len(self.per_user))]


def numerical_rank(s: np.ndarray, shape: tuple[int, int], scale: float | None = None) -> int:
    """Count of singular values above ``max(shape) * eps * scale``.

    ``scale`` defaults to the largest singular value; pass the norm of a
    factor when the matrix itself may be numerically zero.
    """
    if s.size == 0:
        return 0
    ref = s[0] if scale is None else max(scale, s[0])
    if ref == 0:
        return 0
    return int(np.sum(s > max(shape) * _EPS * ref))


def _effective(Hj: np.ndarray, pc: np.ndarray):
    Heff = Hj @ pc
    dec = svd(Heff)
    scale = np.linalg.norm(Hj, 2) * np.linalg.norm(pc, 2)
    rank = numerical_rank(dec.S, (max(Heff.shape), Hj.shape[1]), scale)
    return dec.S[:rank].copy(), dec.V[:, :rank].copy()


def _assemble(per_user: Sequence[UserFactors]) -> np.ndarray:
    blocks = [uf.pc @ uf.pd for uf in per_user]
    return np.hstack(blocks)


def _with_loading(uf: UserFactors, omega: np.ndarray) -> UserFactors:
    pd = uf.w1 * (np.sqrt(omega) / uf.colnorm)
    return replace(uf, pd=pd, omega=np.asarray(omega, dtype=float))


def _equal_loading(stages, p_total: float) -> list[UserFactors]:
    n_streams = sum(phi.size for _, phi, _, _ in stages)
    if n_streams == 0:
        raise RankDeficiency("no user has a non-zero effective channel")
    w = p_total / n_streams
    out = []
    for pc, phi, w1, colnorm in stages:
        uf = UserFactors(pc=pc, pd=np.zeros((pc.shape[1], 0)), phi=phi, w1=w1,
                         omega=np.zeros(phi.size), colnorm=colnorm)
        out.append(_with_loading(uf, np.full(phi.size, w)))
    return out


def _check_dims(ch: ChannelSet) -> None:
    if ch.nb < ch.nu:
        raise DimensionMismatch(f"need N_b >= N_u, got {ch.nb} < {ch.nu}")


def build_bd(ch: ChannelSet, p_total: float) -> Precoder:
    """Block diagonalization with equal power on every active stream."""
    _check_dims(ch)
    stages = []
    for j in range(ch.k):
        Hbar = exclude_user(ch, j)
        if Hbar.shape[0] == 0:
            pc = np.eye(ch.nb, dtype=np.complex128)
        else:
            dec = svd(Hbar)
            rank = numerical_rank(dec.S, Hbar.shape)
            if rank >= ch.nb:
                raise RankDeficiency(f"user {j}: interference null space is empty")
            pc = dec.V[:, rank:]
        phi, w1 = _effective(user_block(ch, j), pc)
        stages.append((pc, phi, w1, np.ones(phi.size)))
    per_user = _equal_loading(stages, p_total)
    return Precoder(p_matrix=_assemble(per_user), per_user=tuple(per_user),
                    kind=Kind.BD, p_total=float(p_total))


def build_rbd(ch: ChannelSet, p_total: float, n0: float) -> Precoder:
    """Regularized BD with ``chi = N_u * n0 / p_total``.

    ``n0 == 0`` is the hard-null-space limit and returns the BD first stage.
    """
    _check_dims(ch)
    chi = ch.nu * n0 / p_total
    stages = []
    for j in range(ch.k):
        Hbar = exclude_user(ch, j)
        if Hbar.shape[0] == 0:
            Wbar = np.eye(ch.nb, dtype=np.complex128)
            s2 = np.zeros(ch.nb)
            rank = 0
        else:
            dec = svd(Hbar)
            Wbar = dec.V
            s2 = np.zeros(ch.nb)
            s2[:dec.S.size] = dec.S**2
            rank = numerical_rank(dec.S, Hbar.shape)
        if chi > 0:
            pc = Wbar * (s2 + chi) ** -0.5
        else:
            if rank >= ch.nb:
                raise RankDeficiency(f"user {j}: interference null space is empty")
            pc = Wbar[:, rank:]
        phi, w1 = _effective(user_block(ch, j), pc)
        colnorm = np.linalg.norm(pc @ w1, axis=0)
        stages.append((pc, phi, w1, colnorm))
    per_user = _equal_loading(stages, p_total)
    return Precoder(p_matrix=_assemble(per_user), per_user=tuple(per_user),
                    kind=Kind.RBD, p_total=float(p_total))


def _normalize(P: np.ndarray, p_total: float) -> np.ndarray:
    return P * np.sqrt(p_total / np.real(np.vdot(P, P)))


def _sliced(ch: ChannelSet, P: np.ndarray) -> tuple[UserFactors, ...]:
    off = ch.offsets()
    out = []
    for j in range(ch.k):
        cols = P[:, off[j]:off[j + 1]]
        n = cols.shape[1]
        out.append(UserFactors(pc=cols, pd=np.eye(n), phi=np.zeros(0), w1=np.zeros((n, 0)),
                               omega=np.zeros(0), colnorm=np.zeros(0)))
    return tuple(out)


def build_zf(ch: ChannelSet, p_total: float) -> Precoder:
    """``P = H^H (H H^H)^{-1}`` scaled to ``trace(P P^H) = p_total``."""
    _check_dims(ch)
    H = ch.H
    s = np.linalg.svd(H, compute_uv=False)
    if numerical_rank(s, H.shape) < ch.nu:
        raise RankDeficiency("ZF needs a full row rank channel")
    P = _normalize(H.conj().T @ np.linalg.inv(H @ H.conj().T), p_total)
    return Precoder(p_matrix=P, per_user=_sliced(ch, P), kind=Kind.ZF, p_total=float(p_total))


def build_mmse(ch: ChannelSet, p_total: float, n0: float) -> Precoder:
    """``P = H^H (H H^H + (N_u n0 / p_total) I)^{-1}``, power normalised."""
    H = ch.H
    reg = ch.nu * n0 / p_total
    G = H @ H.conj().T + reg * np.eye(ch.nu)
    P = _normalize(H.conj().T @ np.linalg.inv(G), p_total)
    return Precoder(p_matrix=P, per_user=_sliced(ch, P), kind=Kind.MMSE, p_total=float(p_total))


def build(kind, ch: ChannelSet, p_total: float, n0: float) -> Precoder:
    kind = Kind(kind)
    if kind is Kind.BD:
        return build_bd(ch, p_total)
    if kind is Kind.RBD:
        return build_rbd(ch, p_total, n0)
    if kind is Kind.ZF:
        return build_zf(ch, p_total)
    return build_mmse(ch, p_total, n0)


def set_power_loading(pre: Precoder, omegas: Sequence[Sequence[float]]) -> Precoder:
    """Reassemble a BD/RBD precoder with new per-stream powers.

    No renormalisation is applied: stream powers are the actual column
    powers, so ``trace(P P^H) == sum(omegas)``.
    """
    if pre.kind not in (Kind.BD, Kind.RBD):
        raise ValueError(f"power loading applies to BD/RBD, not {pre.kind.value}")
    if len(omegas) != len(pre.per_user):
        raise DimensionMismatch("one omega vector per user required")
    new = []
    total = 0.0
    for uf, om in zip(pre.per_user, omegas):
        om = np.asarray(om, dtype=float)
        if om.shape != uf.phi.shape:
            raise DimensionMismatch(f"omega shape {om.shape} != phi shape {uf.phi.shape}")
        if np.any(om < 0):
            raise NegativePower("stream powers must be non-negative")
        total += float(om.sum())
        new.append(_with_loading(uf, om))
    if total > pre.p_total + 1e-9 * max(1.0, pre.p_total):
        raise BudgetExceeded(f"sum of powers {total} exceeds budget {pre.p_total}")
    return replace(pre, p_matrix=_assemble(new), per_user=tuple(new))
