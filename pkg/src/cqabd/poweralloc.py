"""Stream power loading: classical waterfilling and the quantization-aware
active-set allocation (MAAS).

Both allocators work on a pooled vector of squared stream gains ``phi2`` and
a noise level ``N0 = N_u / SNR``. MAAS maximises the per-stream objective

    sum_m log2(1 + d2 phi2_m w_m / N0 - d2 (1 - d2) phi2_m**2 w_m**2 / N0**2)

(``d2 = delta**2``) through a closed-form water level and per-stream powers
with Kuhn-Tucker rejection of negative streams. With ``delta == 1`` both
constants reach their limits ``C1 = -1``, ``C2 = 0`` and the allocation is
exactly waterfilling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DomainError, EmptyProblem, NegativeDiscriminant,
                     NoFeasibleAllocation)

__all__ = [
    "AllocationProblem",
    "Allocation",
    "c1",
    "c2",
    "mu_opt",
    "waterfill",
    "maas",
    "equal_power",
    "maas_objective",
]


@dataclass(frozen=True)
class AllocationProblem:
    phi2: np.ndarray
    nu: int
    snr: float
    delta: float = 1.0
    p_total: float | None = None

    def __post_init__(self):
        phi2 = np.atleast_1d(np.asarray(self.phi2, dtype=float))
        object.__setattr__(self, "phi2", phi2)
        if self.p_total is None:
            object.__setattr__(self, "p_total", float(self.nu))
        if phi2.size and np.any(phi2 <= 0):
            raise ValueError("stream gains must be positive")
        if self.p_total <= 0 or self.snr <= 0:
            raise ValueError("p_total and snr must be positive")
        if not 0 < self.delta <= 1:
            raise DomainError(f"delta={self.delta} outside (0, 1]")

    @property
    def n0(self) -> float:
        return self.nu / self.snr


@dataclass(frozen=True)
class Allocation:
    omega: np.ndarray
    mu: float
    active: int
    fallback_used: bool = False
    trace: tuple = field(default=(), repr=False)


def _check_delta(delta: float) -> None:
    if not 0 < delta <= 1:
        raise DomainError(f"delta={delta} outside (0, 1]")


def c1(delta: float) -> float:
    """``(delta - sqrt(4 - 3 delta^2)) / (2 delta (1 - delta^2))``.

    Evaluated in the cancellation-free form ``-2 / (delta (delta + sqrt(4 - 3 delta^2)))``,
    which equals -1 at ``delta == 1``.
    """
    _check_delta(delta)
    return -2.0 / (delta * (delta + math.sqrt(4.0 - 3.0 * delta**2)))


def c2(delta: float) -> float:
    """``delta (1 - delta^2) / sqrt(4 - 3 delta^2)``; zero at ``delta == 1``."""
    _check_delta(delta)
    return delta * (1.0 - delta**2) / math.sqrt(4.0 - 3.0 * delta**2)


def mu_opt(phi2_active, p: int, nu: int, snr: float, delta: float,
           p_total: float | None = None, printed: bool = False) -> float:
    """Water level from the budget quadratic, smaller (negative-sign) root.

    The quadratic ``mu^2 (C2/N0) S - n mu + P - C1 N0 R = 0`` with
    ``S = sum(phi2)``, ``R = sum(1/phi2)`` and ``n`` active streams is solved
    in the rationalised form ``mu = 2 (P - C1 N0 R) / (n (1 + sqrt(1 - y)))``,
    which stays finite as ``C2 -> 0``.

    ``printed=True`` evaluates the iterative form with ``(N_u - p + 1)**2``
    in the leading factor and ``N_u**2`` inside the radical, for
    sensitivity studies; it agrees with the default when ``p == 1`` and
    ``p_total == nu``.
    """
    g = np.asarray(phi2_active, dtype=float)
    if g.size == 0:
        raise EmptyProblem("no active streams")
    C1, C2 = c1(delta), c2(delta)
    S, R = float(g.sum()), float(np.sum(1.0 / g))
    if printed:
        k = nu - p + 1
        y = 4.0 * C2 * S * (snr - C1 * R) / nu**2
        if y > 1:
            raise NegativeDiscriminant(f"discriminant {1 - y:.3e} < 0")
        return 2.0 * k**2 * (snr - C1 * R) / (nu**2 * snr * (1.0 + math.sqrt(1.0 - y)))
    P = float(nu if p_total is None else p_total)
    n0 = nu / snr
    n = g.size
    lin = P - C1 * n0 * R
    y = 4.0 * C2 * S * lin / (n**2 * n0)
    if y > 1:
        raise NegativeDiscriminant(f"discriminant {1 - y:.3e} < 0")
    return 2.0 * lin / (n * (1.0 + math.sqrt(1.0 - y)))


def equal_power(problem: AllocationProblem) -> Allocation:
    n = problem.phi2.size
    if n == 0:
        raise EmptyProblem("no streams")
    return Allocation(omega=np.full(n, problem.p_total / n), mu=problem.p_total / n, active=n)


def waterfill(problem: AllocationProblem) -> Allocation:
    """Classical waterfilling ``w = (mu - N0/phi2)^+`` with ``sum(w) = P``.

    Streams are dropped weakest-first until the water level clears every
    remaining floor. ``problem.delta`` is ignored.
    """
    g = problem.phi2
    if g.size == 0:
        raise EmptyProblem("no streams")
    order = np.argsort(-g, kind="stable")
    floors = problem.n0 / g[order]
    n = g.size
    while True:
        mu = (problem.p_total + floors[:n].sum()) / n
        if mu - floors[n - 1] > 0 or n == 1:
            break
        n -= 1
    sorted_w = np.zeros(g.size)
    sorted_w[:n] = mu - floors[:n]
    omega = np.zeros(g.size)
    omega[order] = sorted_w
    return Allocation(omega=omega, mu=float(mu), active=n)


def maas(problem: AllocationProblem, printed: bool = False) -> Allocation:
    """Quantization-aware active-set power allocation.

    Each round computes the water level over the active streams and the
    per-stream powers ``C1 N0/phi2 + mu - mu^2 C2 phi2/N0``. If any power is
    negative, the weakest negative stream is switched off and the round is
    repeated with ``p`` incremented. Accepted powers are finally rescaled
    so that they use the budget exactly.

    When the water-level quadratic has no real root the classical
    waterfilling solution is returned with ``fallback_used=True``.
    """
    g = problem.phi2
    if g.size == 0:
        raise EmptyProblem("no streams")
    C1, C2 = c1(problem.delta), c2(problem.delta)
    active = np.ones(g.size, dtype=bool)
    p = 1
    trace = []
    while True:
        if not active.any():
            raise NoFeasibleAllocation("every stream was rejected")
        ga = g[active]
        try:
            mu = mu_opt(ga, p, problem.nu, problem.snr, problem.delta,
                        p_total=problem.p_total, printed=printed)
        except NegativeDiscriminant:
            wf = waterfill(problem)
            return Allocation(omega=wf.omega, mu=wf.mu, active=wf.active,
                              fallback_used=True, trace=tuple(trace))
        n0 = (problem.nu - p + 1) / problem.snr if printed else problem.n0
        w = C1 * n0 / ga + mu - mu**2 * C2 * ga / n0
        trace.append({"p": p, "mu": mu, "active": int(active.sum()), "omega": w.copy()})
        neg = w < 0
        if not neg.any():
            break
        idx = np.flatnonzero(active)[neg]
        weakest = idx[np.argmin(g[idx])]
        active[weakest] = False
        p += 1
    omega = np.zeros(g.size)
    omega[active] = w
    s = omega.sum()
    if s > 0:
        omega *= problem.p_total / s
    return Allocation(omega=omega, mu=float(mu), active=int(active.sum()), trace=tuple(trace))


def maas_objective(problem: AllocationProblem, omega) -> float:
    """Truncated-series sum rate, in bits, of a per-stream allocation.

    Returns ``-inf`` if any determinant factor is non-positive.
    """
    w = np.asarray(omega, dtype=float)
    d2 = problem.delta**2
    a = problem.phi2 * w / problem.n0
    d = 1.0 + d2 * a - d2 * (1.0 - d2) * a**2
    if np.any(d <= 0):
        return -math.inf
    return float(np.sum(np.log2(d)))
