"""Achievable sum-rates under Bussgang-linearized DAC quantization.

All quantities use noise-normalized units: the receive noise covariance is
``(N_u / SNR) I`` and the symbol covariance is ``I``. Dividing through by the
noise turns ``(HM)(HM)^H`` into ``G = (SNR / N_u) (HM)(HM)^H`` and

    C = log2 det(I + delta^2 G ((1 - delta^2) G + I)^{-1}).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import ConfigError, DomainError
from .numerics import as_matrix, logdet_hermitian_psd
from .precoding import PrecoderResult
from .quantization import QuantizerSpec

__all__ = [
    "RateInputs",
    "NoiseModel",
    "sum_rate_cqa",
    "sum_rate_full_resolution",
    "receive_covariance",
    "distortion_plus_noise_covariance",
    "empirical_rate_roughly_quantized",
    "MIN_PACKET_LEN",
]

MIN_PACKET_LEN = 100


@dataclass(frozen=True)
class RateInputs:
    hm: np.ndarray
    snr: float
    nu: int
    delta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "hm", as_matrix(self.hm))
        _check(self.snr, self.delta)


@dataclass(frozen=True)
class NoiseModel:
    """Receive noise ``(N_u / SNR) I``, also expressible through ``N_0 / 2``."""

    nu: int
    snr: float

    @property
    def variance(self) -> float:
        return self.nu / self.snr

    @property
    def n0(self) -> float:
        return 2.0 * self.variance

    @property
    def r_nn(self) -> np.ndarray:
        return self.variance * np.eye(self.nu)


def _check(snr: float, delta: float) -> None:
    if not snr > 0:
        raise DomainError(f"SNR must be positive, got {snr}")
    if not 0 <= delta <= 1:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")


def _gram(hm, snr: float, nu: int) -> np.ndarray:
    hm = as_matrix(hm)
    g = (snr / nu) * (hm @ hm.conj().T)
    return 0.5 * (g + g.conj().T)


def sum_rate_cqa(inp: RateInputs) -> float:
    """Closed-form sum-rate in bits per channel use."""
    g = _gram(inp.hm, inp.snr, inp.nu)
    eye = np.eye(g.shape[0])
    d2 = inp.delta ** 2
    inner = (1 - d2) * g + eye
    # G and the inner matrix commute, so inner^{-1} G is Hermitian PSD.
    x = np.linalg.solve(inner, g)
    x = 0.5 * (x + x.conj().T)
    return max(0.0, logdet_hermitian_psd(eye + d2 * x))


def sum_rate_full_resolution(hm, snr: float, nu: int) -> float:
    """``log2 det(I + (SNR/N_u)(HM)(HM)^H)``."""
    return sum_rate_cqa(RateInputs(hm, snr, nu, 1.0))


def receive_covariance(hm, delta: float, snr: float, nu: int) -> np.ndarray:
    """Received-signal covariance: useful part, distortion part and noise."""
    _check(snr, delta)
    g = _gram(hm, snr, nu)
    return delta ** 2 * g + (1 - delta ** 2) * g + np.eye(g.shape[0])


def distortion_plus_noise_covariance(hm, delta: float, snr: float, nu: int) -> np.ndarray:
    _check(snr, delta)
    g = _gram(hm, snr, nu)
    return (1 - delta ** 2) * g + np.eye(g.shape[0])


def empirical_rate_roughly_quantized(ch: ChannelSet, pre: PrecoderResult,
                                     spec: QuantizerSpec, snr: float,
                                     packet_len: int,
                                     rng: np.random.Generator) -> float:
    """Packet-level rate of a precoder whose output is quantized as is.

    The precoded packet ``M S`` is quantized with the absolute step of
    ``spec`` and no power rescaling, sent through ``H`` with noise
    ``CN(0, N_u/SNR)`` (``snr = inf`` disables noise), and each receive
    antenna ``k`` is fitted to its own symbol stream by least squares. The
    result is ``sum_k log2(1 + |g_k|^2 / v_k)`` with gain ``g_k``, residual
    variance ``v_k`` and unit symbol power.

    Symbols are drawn before noise, both as complex Gaussians.
    """
    if packet_len < MIN_PACKET_LEN:
        raise ConfigError(f"packet length {packet_len} < {MIN_PACKET_LEN}")
    if not snr > 0:
        raise DomainError(f"SNR must be positive, got {snr}")
    h = ch.combined
    nu = ch.nu
    s = np.sqrt(0.5) * (rng.standard_normal((nu, packet_len))
                        + 1j * rng.standard_normal((nu, packet_len)))
    noise = np.sqrt(0.5) * (rng.standard_normal((nu, packet_len))
                            + 1j * rng.standard_normal((nu, packet_len)))
    y = h @ spec.quantize(pre.combined @ s)
    if np.isfinite(snr):
        y = y + np.sqrt(nu / snr) * noise
    energy = np.sum(np.abs(s) ** 2, axis=1)
    gain = np.sum(y * s.conj(), axis=1) / energy
    resid = y - gain[:, None] * s
    var = np.sum(np.abs(resid) ** 2, axis=1) / (packet_len - 1)
    return float(np.sum(np.log2(1 + np.abs(gain) ** 2 / var)))
