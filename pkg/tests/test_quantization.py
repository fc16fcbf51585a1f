import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from cqabd.errors import ConfigError, DegenerateError, DomainError
from cqabd.quantization import (
    QuantizerSpec,
    bussgang_alpha,
    bussgang_delta,
    bussgang_t_diagonal,
    default_step,
    distortion_covariance,
    empirical_bussgang_gain,
    per_antenna_alpha,
    quantizer_mse,
    uniform_quantize,
)
from conftest import crandn

RAIL = np.sqrt(0.5)


def rail_moments(levels, step):
    """Quadrature oracle: E[Q(x)^2] and E[Q(x) x] for real x ~ N(0, 1/2)."""
    thr = step * (np.arange(1, levels) - levels / 2)
    edges = np.concatenate(([-np.inf], thr, [np.inf]))
    out = step * (np.arange(levels) - (levels - 1) / 2)
    pdf = norm(scale=RAIL).pdf
    eq2 = exq = 0.0
    for a, b, q in zip(edges[:-1], edges[1:], out):
        eq2 += q * q * integrate.quad(pdf, a, b)[0]
        exq += q * integrate.quad(lambda x: x * pdf(x), a, b)[0]
    return eq2, exq


# -- quantizer ---------------------------------------------------------------

def test_quantizer_examples():
    assert uniform_quantize(0.3, 4, 1.0) == 0.5
    assert uniform_quantize(10 + 10j, 4, 1.0) == 1.5 + 1.5j
    assert uniform_quantize(-0.4 + 0.9j, 4, 1.0) == -0.5 + 0.5j
    np.testing.assert_array_equal(uniform_quantize([-3, -1.2, 0.0, 1.0], 4, 1.0),
                                  [-1.5, -1.5, 0.5, 1.5])


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.integers(1, 6),
       st.floats(1e-3, 10))
def test_quantizer_odd_and_bounded(re, im, bits, step):
    x = re + 1j * im
    levels = 2 ** bits
    q = uniform_quantize(x, levels, step)
    assert uniform_quantize(-x, levels, step) == -q
    top = step * (levels - 1) / 2
    assert abs(q.real) <= top and abs(q.imag) <= top
    if abs(re) < top and abs(im) < top:
        assert abs(q.real - re) <= step / 2 + 1e-12 * step
        assert abs(q.imag - im) <= step / 2 + 1e-12 * step


@pytest.mark.parametrize("levels,step", [(3, 1.0), (1, 1.0), (4, 0.0), (4, -1.0)])
def test_quantizer_rejects(levels, step):
    with pytest.raises(DomainError):
        uniform_quantize(1.0, levels, step)


def test_spec_validation():
    with pytest.raises(ConfigError):
        QuantizerSpec(0)
    with pytest.raises(ConfigError):
        QuantizerSpec(2, step=-1.0)
    with pytest.raises(ConfigError):
        QuantizerSpec(2, nb=0)
    spec = QuantizerSpec(3, step=0.5, nb=16, power=4.0)
    assert spec.levels == 8
    assert spec.gamma == pytest.approx(0.25)


# -- default steps -----------------------------------------------------------

# Frozen from a golden-section search over quadrature MSE (independent oracle).
FROZEN_STEPS = {1: 1.12837917, 2: 0.70405681, 3: 0.41437832, 4: 0.23702262}
FROZEN_MSE = {1: 0.18169, 2: 0.059423, 3: 0.018720, 4: 0.0057714}


@pytest.mark.parametrize("bits", sorted(FROZEN_STEPS))
def test_default_step_frozen(bits):
    assert default_step(bits) == pytest.approx(FROZEN_STEPS[bits], abs=1e-6)
    assert quantizer_mse(2 ** bits, default_step(bits)) == pytest.approx(FROZEN_MSE[bits], rel=1e-4)


def test_one_bit_step_closed_form():
    # For one bit the optimal output level is E|x| = sqrt(1/pi) for N(0, 1/2).
    assert default_step(1) == pytest.approx(2 / np.sqrt(np.pi), rel=1e-7)


@pytest.mark.parametrize("levels,step", [(2, 0.7), (4, 0.5), (8, 0.3), (16, 0.2)])
def test_mse_matches_quadrature(levels, step):
    eq2, exq = rail_moments(levels, step)
    assert quantizer_mse(levels, step) == pytest.approx(0.5 - 2 * exq + eq2, rel=1e-8)


def test_default_step_rejects():
    with pytest.raises(DomainError):
        default_step(0)


# -- alpha and delta ---------------------------------------------------------

@pytest.mark.parametrize("g", [0.1, 0.7, 2.5])
def test_alpha_one_bit(g):
    assert bussgang_alpha(QuantizerSpec(1, step=g)) == pytest.approx(np.sqrt(2) / g, rel=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.floats(0.05, 3))
def test_alpha_restores_power(bits, g):
    eq2, _ = rail_moments(2 ** bits, g)
    alpha = bussgang_alpha(QuantizerSpec(bits, step=g))
    assert alpha ** 2 * eq2 == pytest.approx(0.5, rel=1e-7)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.floats(0.05, 3))
def test_delta_matches_quadrature(bits, g):
    _, exq = rail_moments(2 ** bits, g)
    factors = bussgang_delta(QuantizerSpec(bits, step=g))
    assert factors.delta == pytest.approx(factors.alpha * exq / 0.5, rel=1e-7)
    assert 0 < factors.delta <= 1 + 1e-12


def test_alpha_homogeneous_in_step():
    for g in (0.2, 1.0, 3.0):
        a1 = bussgang_alpha(QuantizerSpec(1, step=g))
        a2 = bussgang_alpha(QuantizerSpec(1, step=2 * g))
        assert a1 == pytest.approx(2 * a2, rel=1e-12)


def test_delta_one_bit():
    assert bussgang_delta(QuantizerSpec(1, step=0.37)).delta == pytest.approx(np.sqrt(2 / np.pi), rel=1e-12)


def test_delta_high_resolution_and_monotone():
    deltas = [bussgang_delta(QuantizerSpec(b)).delta for b in range(1, 13)]
    assert np.all(np.diff(deltas) > 0)
    assert deltas[-1] > 0.999
    np.testing.assert_allclose(deltas[:4], [0.797885, 0.938698, 0.981102, 0.994212], atol=1e-6)


def test_delta_matrix_shape():
    f = bussgang_delta(QuantizerSpec(2, nb=5, power=3.0))
    np.testing.assert_allclose(f.t_scalar_matrix, f.delta * np.eye(5))


def test_verbatim_agrees_for_one_bit_only():
    a = bussgang_delta(QuantizerSpec(1, step=0.9))
    b = bussgang_delta(QuantizerSpec(1, step=0.9, verbatim=True))
    assert a.delta == pytest.approx(b.delta, rel=1e-14)
    c = bussgang_delta(QuantizerSpec(3, verbatim=True))
    assert abs(c.delta - bussgang_delta(QuantizerSpec(3)).delta) > 0.1


@pytest.mark.parametrize("bits", [1, 2, 3, 4])
def test_delta_monte_carlo(bits):
    spec = QuantizerSpec(bits)
    est = empirical_bussgang_gain(spec, 400_000, np.random.default_rng(bits))
    assert abs(est.gain - bussgang_delta(spec).delta) <= 3 * est.stderr


def test_monte_carlo_needs_samples():
    with pytest.raises(DomainError):
        empirical_bussgang_gain(QuantizerSpec(2), 1000, np.random.default_rng(0))


@pytest.mark.parametrize("bits", [1, 2, 3])
def test_monte_carlo_power_restored(bits):
    rng = np.random.default_rng(7)
    nb, power = 8, 8.0
    spec = QuantizerSpec(bits, nb=nb, power=power)
    x = np.sqrt(power / nb / 2) * (rng.standard_normal((nb, 200_000))
                                   + 1j * rng.standard_normal((nb, 200_000)))
    y = bussgang_alpha(spec) * spec.quantize(x)
    assert np.mean(np.sum(np.abs(y) ** 2, axis=0)) == pytest.approx(power, rel=0.01)


# -- per-antenna gains and distortion ----------------------------------------

def test_t_diagonal_equal_rows_gives_delta(rng):
    nb, nu = 6, 3
    phases = np.exp(2j * np.pi * rng.random((nb, nu)))
    m = phases / np.sqrt(nb)  # every row carries nu / nb
    spec = QuantizerSpec(2, nb=nb, power=nu)
    np.testing.assert_allclose(bussgang_t_diagonal(m, spec), bussgang_delta(spec).delta, rtol=1e-12)
    assert per_antenna_alpha(m, spec) == pytest.approx(bussgang_alpha(spec), rel=1e-12)


def test_t_diagonal_scalar():
    spec = QuantizerSpec(1, step=0.8)
    assert bussgang_t_diagonal([[1.0]], spec)[0] == pytest.approx(np.sqrt(2 / np.pi), rel=1e-12)


def test_t_diagonal_zero_row():
    with pytest.raises(DegenerateError):
        bussgang_t_diagonal(np.array([[1.0], [0.0]]), QuantizerSpec(2, nb=2))


def test_distortion_covariance_cases(rng):
    m = crandn(rng, 4, 2)
    np.testing.assert_allclose(distortion_covariance(m, 1.0).r_ff, 0)
    np.testing.assert_allclose(distortion_covariance(m, 0.0, 2.0).r_ff, 2 * m @ m.conj().T)
    r = distortion_covariance(m, 0.9).r_ff
    np.testing.assert_allclose(r, r.conj().T)
    assert np.min(np.linalg.eigvalsh(r)) >= -1e-12
    with pytest.raises(DomainError):
        distortion_covariance(m, 1.2)


def test_distortion_uncorrelated_with_input():
    # The Bussgang residual is orthogonal to the input it was fitted on.
    rng = np.random.default_rng(11)
    spec = QuantizerSpec(2)
    f = bussgang_delta(spec)
    x = RAIL * (rng.standard_normal(1_000_000) + 1j * rng.standard_normal(1_000_000))
    resid = f.alpha * spec.quantize(x) - f.delta * x
    corr = np.mean(resid * x.conj())
    assert abs(corr) <= 5 * np.std(resid * x.conj()) / np.sqrt(x.size)
    assert np.mean(np.abs(resid) ** 2) == pytest.approx(1 - f.delta ** 2, rel=0.01)
