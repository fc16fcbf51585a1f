"""Dense complex linear-algebra helpers.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; the
helpers here add the conventions the precoders rely on (full SVD with a
fixed phase convention, a single relative rank threshold, a Cholesky based
log-determinant).
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.special import ndtr

from .errors import DomainError, NumericalError

__all__ = [
    "RANK_RTOL",
    "SvdResult",
    "as_matrix",
    "hermitian",
    "svd",
    "numerical_rank",
    "sample_gaussian_matrix",
    "standard_normal_cdf",
    "logdet_hermitian_psd",
    "frobenius",
]

#: Singular values below ``RANK_RTOL * sigma_max`` count as zero.
RANK_RTOL = 1e-10


class SvdResult(NamedTuple):
    """Full SVD ``a = u @ diag(sigma) @ w.conj().T``.

    ``u`` is rows x rows, ``w`` is cols x cols and ``sigma`` holds the
    ``min(rows, cols)`` singular values in descending order.
    """

    u: np.ndarray
    sigma: np.ndarray
    w: np.ndarray

    def reconstruct(self) -> np.ndarray:
        k = self.sigma.size
        return (self.u[:, :k] * self.sigma) @ self.w[:, :k].conj().T

    @property
    def rank(self) -> int:
        return numerical_rank(self.sigma)


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex128 array, rejecting empty or non-finite input."""
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim == 1:
        m = m[:, None]
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DomainError(f"expected a non-empty matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"matrix of shape {m.shape} has non-finite entries")
    return m


def hermitian(a: np.ndarray) -> np.ndarray:
    return np.conj(a).T


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def _fix_phase(u: np.ndarray, w: np.ndarray, k: int) -> None:
    # Rotate every column of w so its largest-magnitude entry is real and
    # positive; the paired column of u gets the same rotation.
    idx = np.argmax(np.abs(w), axis=0)
    pivots = w[idx, np.arange(w.shape[1])]
    mag = np.abs(pivots)
    phase = np.ones_like(pivots)
    nz = mag > 0
    phase[nz] = np.conj(pivots[nz]) / mag[nz]
    w *= phase
    u[:, :k] *= phase[:k]


def svd(a) -> SvdResult:
    """Full singular value decomposition with a deterministic phase convention.

    Raises
    ------
    NumericalError
        If LAPACK fails to converge.
    """
    m = as_matrix(a)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"SVD did not converge for a {m.shape[0]}x{m.shape[1]} matrix"
        ) from exc
    w = vh.conj().T.copy()
    u = u.copy()
    _fix_phase(u, w, s.size)
    return SvdResult(u, s, w)


def numerical_rank(sigma, rtol: float = RANK_RTOL) -> int:
    sigma = np.asarray(sigma, dtype=float)
    if sigma.size == 0 or sigma[0] <= 0:
        return 0
    return int(np.count_nonzero(sigma > rtol * sigma.max()))


def sample_gaussian_matrix(rows: int, cols: int, variance: float,
                           rng: np.random.Generator) -> np.ndarray:
    """Draw a rows x cols matrix with i.i.d. CN(0, variance) entries.

    Real and imaginary parts are independent N(0, variance/2). The real
    parts are drawn first, then the imaginary parts, so a given generator
    state always yields the same matrix.
    """
    if variance <= 0:
        raise DomainError(f"variance must be positive, got {variance}")
    if rows < 1 or cols < 1:
        raise DomainError(f"invalid shape {rows}x{cols}")
    scale = np.sqrt(variance / 2.0)
    re = rng.standard_normal((rows, cols))
    im = rng.standard_normal((rows, cols))
    return scale * (re + 1j * im)


def standard_normal_cdf(w):
    """Standard normal CDF, accurate in both tails."""
    return ndtr(w)


def logdet_hermitian_psd(a) -> float:
    """``log2 det(a)`` for a Hermitian positive definite matrix via Cholesky.

    The input is symmetrized first; an anti-Hermitian part larger than
    ``1e-10`` relative to the matrix norm is rejected.
    """
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise DomainError(f"logdet needs a square matrix, got {m.shape}")
    herm = 0.5 * (m + m.conj().T)
    skew = np.linalg.norm(m - herm)
    if skew > 1e-10 * max(1.0, np.linalg.norm(herm)):
        raise DomainError(f"matrix is not Hermitian (skew part {skew:.3g})")
    try:
        chol = np.linalg.cholesky(herm)
    except np.linalg.LinAlgError as exc:
        raise DomainError(
            f"{m.shape[0]}x{m.shape[0]} matrix is not positive definite"
        ) from exc
    return float(2.0 * np.sum(np.log2(np.real(np.diag(chol)))))
