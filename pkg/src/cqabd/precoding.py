"""Block diagonalization (BD), regularized BD (RBD) and zero-forcing precoders.

BD and RBD are built in two stages per user ``j``:

* stage one, ``M_j^c``, suppresses (BD) or trades off (RBD) the interference
  user ``j`` causes at every other user, using the SVD of the stack of the
  other users' channels;
* stage two, ``M_j^d``, diagonalizes the effective channel ``H_j M_j^c`` and
  applies water-filling power loading.

The per-user products ``M_j = M_j^c M_j^d`` are concatenated column-wise and
the result is scaled to ``trace(M M^H) = N_u``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .channel import ChannelSet, exclude_user
from .errors import ConfigError, DegenerateError, InfeasibleError, RankError
from .numerics import SvdResult, numerical_rank, svd

__all__ = [
    "PrecoderKind",
    "PrecoderResult",
    "RbdRegularization",
    "ExclusionSvds",
    "exclusion_svds",
    "bd_stage_one",
    "rbd_stage_one",
    "stage_two",
    "water_filling",
    "zf_precoder",
    "assemble_and_normalize",
    "build_precoder",
]


class PrecoderKind(str, Enum):
    BD = "BD"
    RBD = "RBD"
    ZF = "ZF"

    @classmethod
    def parse(cls, value) -> "PrecoderKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigError(f"unknown precoder {value!r}; expected bd, rbd or zf") from None


@dataclass(frozen=True)
class RbdRegularization:
    """RBD regularizer ``alpha_rbd = N_u * sigma_n^2 / mu``."""

    nu: int
    sigma_n_sq: float
    mu: float

    def __post_init__(self):
        if self.sigma_n_sq < 0 or self.mu <= 0 or self.nu < 1:
            raise ConfigError(
                f"invalid RBD regularization (nu={self.nu}, "
                f"sigma_n_sq={self.sigma_n_sq}, mu={self.mu})"
            )

    @property
    def alpha_rbd(self) -> float:
        return self.nu * self.sigma_n_sq / self.mu

    @classmethod
    def for_snr(cls, nu: int, snr: float) -> "RbdRegularization":
        """Default regularizer: noise ``N_u/SNR`` and total power ``N_u``."""
        return cls(nu, nu / snr, float(nu))


@dataclass
class PrecoderResult:
    kind: PrecoderKind
    per_user_c: list[np.ndarray]
    per_user_d: list[np.ndarray]
    per_user: list[np.ndarray]
    combined: np.ndarray
    loading: list[np.ndarray] = field(default_factory=list)
    scale: float = 1.0

    @property
    def nu(self) -> int:
        return self.combined.shape[1]

    @property
    def nb(self) -> int:
        return self.combined.shape[0]

    def transmit_power(self) -> float:
        """``trace(M M^H)``, the average transmit power for unit-power symbols."""
        return float(np.real(np.vdot(self.combined, self.combined)))


# -- stage one ---------------------------------------------------------------

@dataclass(frozen=True)
class ExclusionSvds:
    """SVDs of every user's exclusion stack; independent of the SNR."""

    per_user: tuple[SvdResult, ...]


def _exclusion_svd(ch: ChannelSet, j: int) -> SvdResult:
    hbar = exclude_user(ch, j)
    if hbar.shape[0] == 0:
        eye = np.eye(ch.nb, dtype=np.complex128)
        return SvdResult(np.zeros((0, 0), dtype=np.complex128), np.zeros(0), eye)
    return svd(hbar)


def exclusion_svds(ch: ChannelSet) -> ExclusionSvds:
    return ExclusionSvds(tuple(_exclusion_svd(ch, j) for j in range(1, ch.users + 1)))


def bd_stage_one(ch: ChannelSet, j: int, dec: SvdResult | None = None) -> np.ndarray:
    """Orthonormal basis of the null space of the other users' channels.

    These are the trailing ``N_b - rank`` right singular vectors of the
    exclusion stack.
    """
    dec = _exclusion_svd(ch, j) if dec is None else dec
    rank = numerical_rank(dec.sigma)
    if ch.nb <= rank:
        raise InfeasibleError(
            f"user {j}: other users' channels have rank {rank} >= N_b = {ch.nb}, "
            "no null space for block diagonalization"
        )
    return dec.w[:, rank:]


def rbd_stage_one(ch: ChannelSet, j: int, reg: RbdRegularization,
                  dec: SvdResult | None = None) -> np.ndarray:
    """``W (Phi^T Phi + alpha_rbd I)^{-1/2}`` for the exclusion stack of user ``j``."""
    dec = _exclusion_svd(ch, j) if dec is None else dec
    diag = np.zeros(ch.nb)
    diag[: dec.sigma.size] = dec.sigma ** 2
    diag += reg.alpha_rbd
    if np.min(diag) < 1e-14:
        raise DegenerateError(
            f"user {j}: regularized spectrum has an entry {np.min(diag):.3g} < 1e-14; "
            "alpha_rbd is too small for this rank-deficient channel"
        )
    return dec.w * diag ** -0.5


# -- stage two ---------------------------------------------------------------

def water_filling(gains, total_power: float, noise: float) -> np.ndarray:
    """Water-filling power allocation over parallel channels.

    Parameters
    ----------
    gains : array_like
        Channel power gains (squared singular values), non-negative.
    total_power : float
        Power budget to distribute.
    noise : float
        Noise variance of each parallel channel.

    Returns
    -------
    np.ndarray
        ``p_i = max(0, mu - noise / gains_i)`` with ``sum(p) == total_power``;
        channels with zero gain receive zero power.
    """
    gains = np.asarray(gains, dtype=float)
    if np.any(gains < 0):
        raise ConfigError("water-filling gains must be non-negative")
    if total_power <= 0:
        raise ConfigError(f"total power must be positive, got {total_power}")
    active = np.flatnonzero(gains > 0)
    if active.size == 0:
        raise InfeasibleError("water-filling needs at least one channel with positive gain")
    power = np.zeros_like(gains)
    if noise <= 0:
        power[active] = total_power / active.size
        return power

    order = active[np.argsort(-gains[active], kind="stable")]
    with np.errstate(over="ignore"):
        floors = noise / gains[order]
    # Drop the weakest channel until the water level clears its floor.
    for k in range(order.size, 0, -1):
        level = (total_power + floors[:k].sum()) / k
        if level > floors[k - 1]:
            # Offsets from the mean floor avoid cancellation when floors >> budget.
            p = total_power / k + (floors[:k].mean() - floors[:k])
            p += (total_power - p.sum()) / k
            power[order[:k]] = p
            break
    return power


def _loading_matrix(p: np.ndarray, rows: int, streams: int) -> np.ndarray:
    gamma = np.zeros((rows, streams))
    k = min(rows, streams, p.size)
    gamma[np.arange(k), np.arange(k)] = np.sqrt(p[:k])
    return gamma


def stage_two(ch: ChannelSet, j: int, mc: np.ndarray, kind, snr: float,
              power: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Second-stage factor ``M_j^d`` and its water-filling powers.

    The user's budget defaults to its share ``N_j`` of the total power
    ``N_u``; the noise level is ``N_u / snr``.
    """
    kind = PrecoderKind.parse(kind)
    hj = ch.per_user[j - 1]
    nj = hj.shape[0]
    eff = svd(hj @ mc)
    rank = numerical_rank(eff.sigma)
    if rank == 0:
        raise RankError(f"user {j}: effective channel is zero")
    budget = float(nj) if power is None else power
    noise = ch.nu / snr
    if kind is PrecoderKind.BD:
        gains = eff.sigma[:rank] ** 2
        basis = eff.w[:, :rank]
    elif kind is PrecoderKind.RBD:
        gains = np.zeros(eff.w.shape[1])
        gains[:rank] = eff.sigma[:rank] ** 2
        basis = eff.w
    else:
        raise ConfigError("stage two applies to BD and RBD only")
    p = water_filling(gains, budget, noise)
    return basis @ _loading_matrix(p, basis.shape[1], nj), p


# -- ZF and assembly ---------------------------------------------------------

def assemble_and_normalize(parts: Sequence[np.ndarray], kind,
                           per_user_c: Sequence[np.ndarray] | None = None,
                           per_user_d: Sequence[np.ndarray] | None = None,
                           loading: Sequence[np.ndarray] | None = None) -> PrecoderResult:
    """Concatenate per-user precoders and scale to ``trace(M M^H) = N_u``."""
    kind = PrecoderKind.parse(kind)
    parts = [np.asarray(p, dtype=np.complex128) for p in parts]
    if len({p.shape[0] for p in parts}) != 1:
        raise ConfigError("per-user precoders must share the row count N_b")
    combined = np.hstack(parts)
    nu = combined.shape[1]
    power = float(np.real(np.vdot(combined, combined)))
    if power <= 0:
        raise DegenerateError("precoder has zero transmit power")
    scale = float(np.sqrt(nu / power))
    per_user = [scale * p for p in parts]
    if per_user_c is None:
        per_user_c = [p.copy() for p in per_user]
        per_user_d = [np.eye(p.shape[1]) for p in per_user]
    else:
        per_user_c = list(per_user_c)
        per_user_d = [scale * d for d in per_user_d]
    return PrecoderResult(
        kind=kind,
        per_user_c=per_user_c,
        per_user_d=per_user_d,
        per_user=per_user,
        combined=scale * combined,
        loading=list(loading or []),
        scale=scale,
    )


def zf_precoder(ch: ChannelSet, normalize: bool = True) -> PrecoderResult:
    """Channel inversion ``H^H (H H^H)^{-1}``; no power loading."""
    h = ch.combined
    if numerical_rank(np.linalg.svd(h, compute_uv=False)) < ch.nu:
        raise RankError(f"combined channel ({ch.nu}x{ch.nb}) is not full row rank")
    gram = h @ h.conj().T
    m = np.linalg.solve(gram, h).conj().T
    rows = np.cumsum((0,) + ch.dims.per_user)
    parts = [m[:, a:b] for a, b in zip(rows[:-1], rows[1:])]
    if normalize:
        return assemble_and_normalize(parts, PrecoderKind.ZF)
    return PrecoderResult(
        kind=PrecoderKind.ZF,
        per_user_c=[p.copy() for p in parts],
        per_user_d=[np.eye(p.shape[1]) for p in parts],
        per_user=parts,
        combined=m,
    )


def build_precoder(ch: ChannelSet, kind, snr: float,
                   svds: ExclusionSvds | None = None) -> PrecoderResult:
    """Full BD/RBD/ZF precoder for one channel draw at linear ``snr``.

    ``svds`` may carry the exclusion-stack SVDs precomputed by
    :func:`exclusion_svds`, which do not depend on the SNR.
    """
    kind = PrecoderKind.parse(kind)
    if kind is PrecoderKind.ZF:
        return zf_precoder(ch)
    if svds is None:
        svds = exclusion_svds(ch)
    reg = RbdRegularization.for_snr(ch.nu, snr)
    cs, ds, loads, parts = [], [], [], []
    for j in range(1, ch.users + 1):
        dec = svds.per_user[j - 1]
        if kind is PrecoderKind.BD:
            mc = bd_stage_one(ch, j, dec)
        else:
            mc = rbd_stage_one(ch, j, reg, dec)
        md, p = stage_two(ch, j, mc, kind, snr)
        cs.append(mc)
        ds.append(md)
        loads.append(p)
        parts.append(mc @ md)
    return assemble_and_normalize(parts, kind, cs, ds, loads)
