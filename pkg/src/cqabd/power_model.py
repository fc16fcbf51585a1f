"""Converter power arithmetic: ``P(b) = c * tau * 2**b``.

Calibration uses the two published converter data points below (GaAs,
same process). DAC figures derived from them assume the DAC follows the
same doubling law as the ADC, so they are rough estimates.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "ConverterParams",
    "REFERENCE_ADC",
    "REFERENCE_DAC",
    "adc_power",
    "calibrate_c_tau",
    "dac_to_adc_ratio",
    "bit_reduction_saving",
    "reference_summary",
]


@dataclass(frozen=True)
class ConverterParams:
    """Technology constant ``c`` (mW/GHz), sampling rate ``tau`` (GHz), bits."""

    c: float
    tau: float
    bits: int

    def __post_init__(self):
        if not (self.c > 0 and self.tau > 0 and self.bits >= 1):
            raise DomainError(f"invalid converter parameters {self}")


@dataclass(frozen=True)
class ConverterDatum:
    bits: int
    rate_ghz: float
    power_mw: float


# 0.7 um MESFET self-aligned gate process, one ADC and one DAC.
REFERENCE_ADC = ConverterDatum(bits=4, rate_ghz=1.0, power_mw=140.0)
REFERENCE_DAC = ConverterDatum(bits=5, rate_ghz=1.0, power_mw=85.0)


def adc_power(p: ConverterParams) -> float:
    """Dissipation in mW."""
    return p.c * p.tau * 2 ** p.bits


def calibrate_c_tau(datum: ConverterDatum = REFERENCE_ADC) -> float:
    """``c * tau`` in mW that reproduces ``datum`` exactly."""
    return datum.power_mw / 2 ** datum.bits


def dac_to_adc_ratio(dac_power_mw: float, adc_power_mw: float) -> float:
    if not (dac_power_mw > 0 and adc_power_mw > 0):
        raise DomainError("converter powers must be positive")
    return dac_power_mw / adc_power_mw


def bit_reduction_saving(from_bits: int, to_bits: int) -> float:
    """Fractional power saved going from ``from_bits`` down to ``to_bits``."""
    if to_bits >= from_bits:
        raise DomainError(f"target resolution {to_bits} must be below {from_bits}")
    return 1.0 - 2.0 ** (to_bits - from_bits)


def reference_summary() -> dict[str, float]:
    """Calibrated constants and the derived DAC/ADC comparison at 5 bits."""
    c_tau = calibrate_c_tau(REFERENCE_ADC)
    adc4 = adc_power(ConverterParams(c_tau, 1.0, REFERENCE_ADC.bits))
    adc5 = adc_power(ConverterParams(c_tau, 1.0, REFERENCE_DAC.bits))
    return {
        "c_tau_mw": c_tau,
        "adc_4bit_mw": adc4,
        "adc_5bit_mw": adc5,
        "dac_5bit_mw": REFERENCE_DAC.power_mw,
        "dac_to_adc_ratio": dac_to_adc_ratio(REFERENCE_DAC.power_mw, adc5),
        "saving_4_to_2": bit_reduction_saving(4, 2),
    }
