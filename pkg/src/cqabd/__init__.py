"""Quantization-aware block-diagonalization precoding for few-bit DAC downlinks."""

from .channel import ChannelSet, CsiModel, apply_csi_model, generate_iid
from .harness import RateResult, ScenarioConfig, run_scenario
from .poweralloc import AllocationProblem, maas, waterfill
from .precoder import Kind, build, build_bd, build_rbd
from .quantizer import QuantizerSpec, build_quantizer
from .rates import RateInputs, approx_cqa_rate, epsilon_report, exact_cqa_rate

__version__ = "0.1.0"

__all__ = [
    "ChannelSet", "CsiModel", "apply_csi_model", "generate_iid",
    "RateResult", "ScenarioConfig", "run_scenario",
    "AllocationProblem", "maas", "waterfill",
    "Kind", "build", "build_bd", "build_rbd",
    "QuantizerSpec", "build_quantizer",
    "RateInputs", "approx_cqa_rate", "epsilon_report", "exact_cqa_rate",
]
