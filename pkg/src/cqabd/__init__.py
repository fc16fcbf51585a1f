"""Quantization-aware block-diagonalization precoding for few-bit DACs."""

from .channel import ChannelSet, ScenarioDims, exclude_user, generate_channel
from .errors import (
    ConfigError,
    CqaError,
    DegenerateError,
    DomainError,
    InfeasibleError,
    NumericalError,
    RankError,
)
from .harness import Mode, SweepConfig, SweepResult, run_algorithm_one, run_sweep, run_sweeps
from .precoding import PrecoderKind, PrecoderResult, build_precoder, water_filling, zf_precoder
from .quantization import QuantizerSpec, bussgang_alpha, bussgang_delta, uniform_quantize
from .rate import RateInputs, sum_rate_cqa, sum_rate_full_resolution

__version__ = "0.1.0"
