"""Uniform few-bit DAC model and its Bussgang linearization.

Step sizes are *normalized*: ``g = gamma * sqrt(N_b / P)`` is the step in
units of the per-antenna complex standard deviation ``sqrt(P / N_b)``.
Each real/imaginary rail then carries a real Gaussian of variance ``1/2``
in those units, which is where the ``sqrt(2)`` factors below come from.

With thresholds ``t_l = g (l - J/2)``, ``l = 1..J-1``:

* ``alpha = (2 g^2 [((J-1)/2)^2 - 2 sum_l (l - J/2) Phi(sqrt(2) g (l - J/2))])^{-1/2}``
  makes ``E|alpha Q(x)|^2 = E|x|^2``;
* ``delta = alpha g / sqrt(pi) * sum_l exp(-g^2 (l - J/2)^2)`` is the
  Bussgang gain ``E[alpha Q(x) x^*] / E|x|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from .errors import ConfigError, DegenerateError, DomainError
from .numerics import standard_normal_cdf

__all__ = [
    "QuantizerSpec",
    "BussgangFactors",
    "DistortionCovariance",
    "GainEstimate",
    "uniform_quantize",
    "quantizer_mse",
    "default_step",
    "bussgang_alpha",
    "bussgang_delta",
    "bussgang_t_diagonal",
    "per_antenna_alpha",
    "distortion_covariance",
    "empirical_bussgang_gain",
]


def _midrise(x: np.ndarray, levels: int, step: float) -> np.ndarray:
    # Built on |x| and copysign so that Q(-x) == -Q(x) bit for bit.
    idx = np.minimum(np.floor(np.abs(x) / step), levels // 2 - 1)
    return np.copysign(step * (idx + 0.5), x)


def uniform_quantize(x, levels: int, step: float) -> np.ndarray:
    """Symmetric midrise quantizer applied to the real and imaginary rails.

    Output levels are ``step * (l - (levels-1)/2)``; inputs beyond the
    outermost thresholds clip to the outermost levels.
    """
    if levels < 2 or levels % 2:
        raise DomainError(f"levels must be an even count >= 2, got {levels}")
    if step <= 0:
        raise DomainError(f"step must be positive, got {step}")
    x = np.asarray(x)
    if np.iscomplexobj(x):
        return _midrise(x.real, levels, step) + 1j * _midrise(x.imag, levels, step)
    return _midrise(x.astype(float), levels, step)


def quantizer_mse(levels: int, step: float) -> float:
    """MSE of quantizing a real N(0, 1/2) variable with the midrise quantizer."""
    sigma = np.sqrt(0.5)
    t = step * (np.arange(1, levels) - levels / 2) / sigma
    edges = np.concatenate(([-np.inf], t, [np.inf]))
    q = step * (np.arange(levels) - (levels - 1) / 2) / sigma
    a, b = edges[:-1], edges[1:]
    prob = norm.cdf(b) - norm.cdf(a)
    first = norm.pdf(a) - norm.pdf(b)
    # x * pdf(x) vanishes at +-inf; avoid the inf * 0 product.
    apdf = np.where(np.isfinite(a), np.nan_to_num(a) * norm.pdf(a), 0.0)
    bpdf = np.where(np.isfinite(b), np.nan_to_num(b) * norm.pdf(b), 0.0)
    second = prob + apdf - bpdf
    return float(sigma ** 2 * np.sum(second - 2 * q * first + q ** 2 * prob))


@lru_cache(maxsize=None)
def default_step(bits: int) -> float:
    """Normalized step minimizing :func:`quantizer_mse` for ``2**bits`` levels."""
    if bits < 1:
        raise DomainError(f"bits must be >= 1, got {bits}")
    levels = 2 ** bits
    # The optimum shrinks roughly like 2^-b; search in log space around it.
    centre = np.log(2.0 ** (1 - bits) * 1.2)
    res = minimize_scalar(
        lambda u: quantizer_mse(levels, float(np.exp(u))),
        bounds=(centre - 2.0, centre + 2.0),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(np.exp(res.x))


@dataclass(frozen=True)
class QuantizerSpec:
    """DAC resolution and step for an ``nb``-antenna array at total power ``power``.

    ``step`` is the normalized step ``g``; ``None`` selects
    :func:`default_step`. ``verbatim`` evaluates the summands with the
    constant ``(1 - J/2)`` instead of ``(l - J/2)``; it exists only for
    comparison and gives meaningless gains for ``J > 2``.
    """

    bits: int
    step: float | None = None
    nb: int = 1
    power: float = 1.0
    verbatim: bool = False

    def __post_init__(self):
        if int(self.bits) != self.bits or self.bits < 1:
            raise ConfigError(f"bits must be a positive integer, got {self.bits}")
        if self.step is None:
            object.__setattr__(self, "step", default_step(int(self.bits)))
        if not self.step > 0:
            raise ConfigError(f"step must be positive, got {self.step}")
        if self.nb < 1 or not self.power > 0:
            raise ConfigError(f"invalid array size {self.nb} or power {self.power}")

    @property
    def levels(self) -> int:
        return 2 ** int(self.bits)

    @property
    def gamma(self) -> float:
        """Absolute step in signal units, ``g * sqrt(P / N_b)``."""
        return self.step * np.sqrt(self.power / self.nb)

    def quantize(self, x) -> np.ndarray:
        return uniform_quantize(x, self.levels, self.gamma)

    def _offsets(self) -> np.ndarray:
        j = self.levels
        if self.verbatim:
            return np.full(j - 1, 1 - j / 2)
        return np.arange(1, j) - j / 2


class BussgangFactors(NamedTuple):
    alpha: float
    delta: float
    t_scalar_matrix: np.ndarray


class DistortionCovariance(NamedTuple):
    r_ff: np.ndarray


class GainEstimate(NamedTuple):
    gain: float
    stderr: float
    samples: int


def bussgang_alpha(spec: QuantizerSpec) -> float:
    """Output scaling that restores the input power after quantization."""
    if spec.levels < 2:
        raise DomainError("the quantizer needs at least two levels")
    g = spec.step
    c = spec._offsets()
    inner = ((spec.levels - 1) / 2) ** 2 - 2 * np.sum(c * standard_normal_cdf(np.sqrt(2) * g * c))
    return float((2 * g * g * inner) ** -0.5)


def _gain_sum(g: float, c: np.ndarray) -> float:
    return float(np.sum(np.exp(-(g * c) ** 2)))


def bussgang_delta(spec: QuantizerSpec) -> BussgangFactors:
    """Scalar Bussgang gain and the matrix ``delta * I_{N_b}``."""
    alpha = bussgang_alpha(spec)
    g = spec.step
    delta = alpha * g / np.sqrt(np.pi) * _gain_sum(g, spec._offsets())
    return BussgangFactors(alpha, float(delta), delta * np.eye(spec.nb))


def bussgang_t_diagonal(m, spec: QuantizerSpec) -> np.ndarray:
    """Exact per-antenna Bussgang gains from the row powers of ``m``.

    Returns the diagonal of ``T``. Equals ``delta`` on every antenna when all
    rows of ``m`` carry power ``P / N_b``.
    """
    m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    rowpow = np.sum(np.abs(m) ** 2, axis=1)
    if np.any(rowpow <= 0):
        bad = int(np.flatnonzero(rowpow <= 0)[0])
        raise DegenerateError(f"antenna {bad} carries zero power")
    alpha = bussgang_alpha(spec)
    gamma = spec.gamma
    c = spec._offsets()
    expo = np.exp(-np.outer(1.0 / rowpow, (gamma * c) ** 2))
    return alpha * gamma / np.sqrt(np.pi) * rowpow ** -0.5 * expo.sum(axis=1)


def per_antenna_alpha(m, spec: QuantizerSpec) -> float:
    """Output scaling that restores ``trace(M M^H)`` for the actual row powers of ``m``.

    Reduces to :func:`bussgang_alpha` when every antenna carries ``P / N_b``.
    Diagnostic only; the rate pipeline uses the scalar version.
    """
    m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    rowpow = np.sum(np.abs(m) ** 2, axis=1)
    if np.any(rowpow <= 0):
        raise DegenerateError("an antenna carries zero power")
    gamma = spec.gamma
    c = spec._offsets()
    rail_std = np.sqrt(rowpow / 2)
    inner = ((spec.levels - 1) / 2) ** 2 - 2 * (
        standard_normal_cdf(np.outer(1 / rail_std, gamma * c)) @ c)
    out_power = np.sum(2 * gamma ** 2 * inner)
    return float(np.sqrt(rowpow.sum() / out_power))


def distortion_covariance(m, delta: float, sigma_s_sq: float = 1.0) -> DistortionCovariance:
    """``R_ff = (1 - delta^2) sigma_s^2 M M^H``."""
    if not 0 <= delta <= 1:
        raise DomainError(f"delta must lie in [0, 1], got {delta}")
    m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    return DistortionCovariance((1 - delta ** 2) * sigma_s_sq * (m @ m.conj().T))


def empirical_bussgang_gain(spec: QuantizerSpec, samples: int,
                            rng: np.random.Generator) -> GainEstimate:
    """Monte Carlo estimate of ``E[alpha Q(x) x] / E[x^2]`` for real Gaussian ``x``.

    ``x`` has unit variance, so the quantizer step on this rail is
    ``sqrt(2) * g``. The standard error comes from the delta method for a
    ratio of means.
    """
    if samples < 100_000:
        raise DomainError(f"need at least 1e5 samples, got {samples}")
    alpha = bussgang_alpha(spec)
    x = rng.standard_normal(samples)
    y = alpha * uniform_quantize(x, spec.levels, np.sqrt(2) * spec.step)
    num = y * x
    den = x * x
    ratio = num.mean() / den.mean()
    resid = num - ratio * den
    stderr = resid.std(ddof=1) / np.sqrt(samples) / den.mean()
    return GainEstimate(float(ratio), float(stderr), samples)
