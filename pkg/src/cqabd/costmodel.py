"""Analytical FLOP counts and converter power consumption."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError, UnknownKind

__all__ = [
    "KINDS",
    "CostReport",
    "c_delta",
    "precoder_flops",
    "power_alloc_flops",
    "dac_power_mw",
    "adc_power_mw",
    "savings",
    "cost_report",
    "CONVERTER_POWER_MW",
]

# FLOPs charged for one exp() or Gaussian-CDF evaluation
TRANSCENDENTAL_FLOPS = 20
# arithmetic per summand of the gain/normalisation sums
ARITH_PER_TERM = 5

SAMPLING_RATE_GHZ = 1.0
# calibration anchors: DAC(5 bits) = 85 mW, ADC(4 bits) = 140 mW at 1 GHz
_DAC_C = 85.0 / (SAMPLING_RATE_GHZ * 2**5)
_ADC_C = 140.0 / (SAMPLING_RATE_GHZ * 2**4)

# (converter, bits) -> mW reference points
CONVERTER_POWER_MW = {
    ("DAC", 4): 42.5,
    ("ADC", 4): 140.0,
    ("DAC", 5): 85.0,
    ("ADC", 5): 280.0,
    ("DAC", 6): 170.0,
    ("ADC", 6): 560.0,
    ("DAC", 12): 10880.0,
    ("ADC", 12): 35840.0,
}

KINDS = ("ZF", "MMSE", "BD", "RBD", "BZF", "BMMSE", "CQA-BD", "CQA-RBD")
_ALIASES = {"BUSSGANG-ZF": "BZF", "BUSSGANG-MMSE": "BMMSE", "CQABD": "CQA-BD",
            "CQARBD": "CQA-RBD"}


def c_delta(bits: int) -> int:
    """Extra cost of the Bussgang gain and normalisation for ``bits``.

    Both sums run over ``J - 1`` thresholds; each term needs one
    transcendental (exp or Gaussian CDF) plus a few multiply-adds.
    """
    J = 2**bits
    return 2 * (J - 1) * (TRANSCENDENTAL_FLOPS + ARITH_PER_TERM)


def _zf(nb, nu):
    return nb**3 / 2 + nb**2 * (4 * nu - 1.5) - nb * nu


def _mmse(nb, nu):
    return nb**3 / 2 + nb**2 * (4 * nu - 1.5) - nb * (nu - 2)


def _bd(nb, nu, nj):
    return nb**2 * (32 * nj + 8) + nb * (32 * nu**2 + 72 * nj**2) + 64 * nu**2


def precoder_flops(kind: str, nb: int, nu: int, nj: int = 1, bits: int = 4) -> int:
    """Table-level FLOP count for building one precoder.

    Bussgang/CQA kinds add :func:`c_delta` for ``bits``.
    """
    if not nb >= nu >= nj >= 1:
        raise DomainError("need nb >= nu >= nj >= 1")
    key = str(kind).upper()
    key = _ALIASES.get(key, key)
    if key == "ZF":
        v = _zf(nb, nu)
    elif key == "MMSE":
        v = _mmse(nb, nu)
    elif key in ("BD", "RBD"):
        v = _bd(nb, nu, nj)
    elif key == "BZF":
        v = _zf(nb, nu) + c_delta(bits)
    elif key == "BMMSE":
        v = _mmse(nb, nu) + c_delta(bits)
    elif key in ("CQA-BD", "CQA-RBD"):
        v = _bd(nb, nu, nj) + c_delta(bits)
    else:
        raise UnknownKind(kind)
    return int(round(v))


def power_alloc_flops(nu: int) -> int:
    """Order-of-magnitude count for WF or MAAS: linear in ``N_u``."""
    return int(nu)


def _check_bits(b: int) -> None:
    if not 1 <= b <= 14:
        raise DomainError(f"bits must lie in 1..14, got {b}")


def dac_power_mw(b: int) -> float:
    """Power of one real DAC at 1 GHz, doubling with every bit."""
    _check_bits(b)
    return _DAC_C * SAMPLING_RATE_GHZ * 2**b


def adc_power_mw(b: int) -> float:
    _check_bits(b)
    return _ADC_C * SAMPLING_RATE_GHZ * 2**b


def savings(b_from: int, b_to: int) -> float:
    """Fractional power reduction when going from ``b_from`` to ``b_to`` bits."""
    return 1.0 - dac_power_mw(b_to) / dac_power_mw(b_from)


@dataclass(frozen=True)
class CostReport:
    kind: str
    bits: int
    flops: int
    pa_flops_order: int
    dac_power_mw: float
    total_dac_power_mw: float
    dacs_per_antenna: int


def cost_report(kind: str, nb: int, nu: int, nj: int, bits: int,
                dacs_per_antenna: int = 1) -> CostReport:
    """Cost summary; ``dacs_per_antenna=2`` counts separate I and Q converters."""
    per = dac_power_mw(bits)
    return CostReport(
        kind=kind,
        bits=bits,
        flops=precoder_flops(kind, nb, nu, nj, bits),
        pa_flops_order=power_alloc_flops(nu),
        dac_power_mw=per,
        total_dac_power_mw=per * nb * dacs_per_antenna,
        dacs_per_antenna=dacs_per_antenna,
    )
