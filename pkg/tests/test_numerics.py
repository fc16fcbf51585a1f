import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cqabd.errors import DomainError, NumericalError
from cqabd.numerics import (
    logdet_hermitian_psd,
    numerical_rank,
    sample_gaussian_matrix,
    standard_normal_cdf,
    svd,
)
from conftest import crandn


def test_svd_identity():
    res = svd(np.eye(3))
    np.testing.assert_allclose(res.sigma, [1, 1, 1])


def test_svd_diagonal_has_canonical_vectors():
    res = svd(np.diag([3.0, 2.0, 1.0]))
    np.testing.assert_allclose(res.sigma, [3, 2, 1])
    # phase convention makes the pivot entries real positive, so U = W = I
    np.testing.assert_allclose(res.u, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(res.w, np.eye(3), atol=1e-12)


def test_svd_random_wide_reconstructs(rng):
    a = crandn(rng, 4, 6)
    res = svd(a)
    assert res.u.shape == (4, 4) and res.w.shape == (6, 6)
    recon = (res.u[:, :4] * res.sigma) @ res.w[:, :4].conj().T
    assert np.linalg.norm(a - recon) <= 1e-9 * np.linalg.norm(a)
    assert np.all(np.diff(res.sigma) <= 0)


@pytest.mark.parametrize("shape", [(1, 1), (5, 3), (16, 32), (14, 128), (128, 128)])
def test_svd_invariants(rng, shape):
    a = crandn(rng, *shape)
    res = svd(a)
    for q in (res.u, res.w):
        n = q.shape[1]
        assert np.linalg.norm(q.conj().T @ q - np.eye(n)) <= 1e-10 * n
    assert np.linalg.norm(a - res.reconstruct()) <= 1e-9 * np.linalg.norm(a)


def test_svd_phase_convention_is_deterministic(rng):
    a = crandn(rng, 5, 7)
    r1, r2 = svd(a), svd(a * np.exp(0.0j))
    np.testing.assert_array_equal(r1.w, r2.w)
    pivots = r1.w[np.argmax(np.abs(r1.w), axis=0), np.arange(7)]
    np.testing.assert_allclose(pivots.imag, 0, atol=1e-15)
    assert np.all(pivots.real > 0)


def test_svd_rejects_nonfinite():
    with pytest.raises(DomainError):
        svd(np.array([[1.0, np.nan]]))


def test_svd_nonconvergence_is_numerical_error(monkeypatch):
    def boom(*a, **k):
        raise np.linalg.LinAlgError("SVD did not converge")

    monkeypatch.setattr(np.linalg, "svd", boom)
    with pytest.raises(NumericalError, match="3x2"):
        svd(np.ones((3, 2)))


def test_numerical_rank_threshold():
    assert numerical_rank([1.0, 1e-9, 1e-11]) == 2
    assert numerical_rank([0.0, 0.0]) == 0
    assert numerical_rank([]) == 0


def test_gaussian_sample_statistics():
    x = sample_gaussian_matrix(1000, 1000, 1.0, np.random.default_rng(7))
    assert abs(x.mean()) <= 0.01
    assert 0.99 <= np.mean(np.abs(x) ** 2) <= 1.01
    # circular symmetry: both rails carry half the variance
    assert abs(np.var(x.real) - 0.5) < 0.005 and abs(np.var(x.imag) - 0.5) < 0.005


def test_gaussian_variance_four():
    x = sample_gaussian_matrix(500, 500, 4.0, np.random.default_rng(8))
    assert abs(np.mean(np.abs(x) ** 2) / 4.0 - 1) < 0.02


def test_gaussian_same_seed_identical():
    a = sample_gaussian_matrix(3, 5, 1.0, np.random.default_rng(99))
    b = sample_gaussian_matrix(3, 5, 1.0, np.random.default_rng(99))
    np.testing.assert_array_equal(a, b)


def test_gaussian_rejects_bad_variance():
    with pytest.raises(DomainError):
        sample_gaussian_matrix(2, 2, 0.0, np.random.default_rng(0))


def test_normal_cdf_values():
    assert standard_normal_cdf(0.0) == 0.5
    # mpmath ncdf(1) at 30 digits
    assert abs(standard_normal_cdf(1.0) - 0.841344746068542948585) < 1e-15
    # mpmath ncdf(-8) = 6.22e-16
    assert standard_normal_cdf(-8.0) < 1e-14
    assert abs(standard_normal_cdf(-8.0) - 6.22096057427178e-16) < 1e-28


def test_normal_cdf_grid_monotone_and_reflective():
    w = np.arange(-6000, 6001) * 1e-3
    phi = standard_normal_cdf(w)
    assert np.all(np.diff(phi) >= 0)
    assert np.max(np.abs(phi + standard_normal_cdf(-w) - 1)) <= 1e-12
    assert phi.min() >= 0 and phi.max() <= 1


def test_logdet_simple():
    assert logdet_hermitian_psd(np.eye(4)) == 0.0
    assert abs(logdet_hermitian_psd(2 * np.eye(3)) - 3.0) < 1e-14


def test_logdet_matches_singular_value_oracle(rng):
    a = crandn(rng, 6, 9)
    s = np.linalg.svd(a, compute_uv=False)
    expected = np.sum(np.log2(1 + s ** 2))
    assert abs(logdet_hermitian_psd(np.eye(6) + a @ a.conj().T) - expected) < 1e-8


def test_logdet_rejects_indefinite():
    with pytest.raises(DomainError):
        logdet_hermitian_psd(np.diag([1.0, -1.0]))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(1, 5), st.integers(0, 2 ** 32 - 1))
def test_hermitian_of_product(m, k, n, seed):
    r = np.random.default_rng(seed)
    a, b = crandn(r, m, k), crandn(r, k, n)
    np.testing.assert_allclose((a @ b).conj().T, b.conj().T @ a.conj().T, atol=1e-12, rtol=0)
