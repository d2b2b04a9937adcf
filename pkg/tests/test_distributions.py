from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from bayesbt.distributions import (
    GigParams,
    gig_log_density,
    sample_categorical,
    sample_exponential,
    sample_gamma,
    sample_gig,
    sample_negative_binomial,
    sample_theta_tie_mh,
    sample_theta_tie_mixture,
    tie_mixture_components,
    tie_theta_log_density,
)
from bayesbt.exceptions import ConfigurationError, DomainError

from conftest import ks_statistic, make_rng, numeric_cdf


def test_gamma_moments(rng):
    shape, rate = 3.5, 2.0
    x = sample_gamma(shape, rate, rng, size=1_000_000)
    se = math.sqrt(shape) / rate / math.sqrt(x.size)
    assert abs(x.mean() - shape / rate) < 3 * se


def test_gamma_shape_one_is_exponential(rng):
    x = sample_gamma(1.0, 1.5, rng, size=200_000)
    p = math.exp(-1.5)
    assert abs((x > 1).mean() - p) < 3 * math.sqrt(p * (1 - p) / x.size)


@pytest.mark.parametrize("shape, rate", [(0.3, 1.0), (2.0, 5.0), (40.0, 0.5)])
def test_gamma_ks_against_cdf(rng, shape, rate):
    x = sample_gamma(shape, rate, rng, size=100_000)
    assert ks_statistic(x, stats.gamma(shape, scale=1 / rate).cdf) < 0.01


@pytest.mark.parametrize("shape, rate", [(0.0, 1.0), (1.0, 0.0), (-1.0, 1.0), (np.nan, 1.0)])
def test_gamma_domain(rng, shape, rate):
    with pytest.raises(DomainError):
        sample_gamma(shape, rate, rng)


def test_exponential_mean(rng):
    x = sample_exponential(4.0, rng, size=400_000)
    assert abs(x.mean() - 0.25) < 3 * 0.25 / math.sqrt(x.size)
    with pytest.raises(DomainError):
        sample_exponential(0.0, rng)


def test_categorical(rng):
    assert all(sample_categorical([0.0, 0.0, 2.0, 0.0], rng) == 2 for _ in range(100))
    draws = np.array([sample_categorical([1.0, 3.0], rng) for _ in range(20_000)])
    assert abs(draws.mean() - 0.75) < 3 * math.sqrt(0.75 * 0.25 / draws.size)
    with pytest.raises(DomainError):
        sample_categorical([0.0, 0.0], rng)
    with pytest.raises(DomainError):
        sample_categorical([1.0, -1.0], rng)


def test_negative_binomial_geometric_tail(rng):
    p = 0.3
    x = sample_negative_binomial(1.0, p, rng, size=200_000)
    for k in (1, 3, 6):
        q = (1 - p) ** k
        assert abs((x >= k).mean() - q) < 3 * math.sqrt(q * (1 - q) / x.size)
    with pytest.raises(DomainError):
        sample_negative_binomial(1.0, 1.5, rng)


# ---------------------------------------------------------------- GIG


def test_gig_param_domain():
    with pytest.raises(DomainError):
        GigParams(0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        GigParams(1.0, 0.0, -0.5)
    with pytest.raises(DomainError):
        GigParams(0.0, 1.0, 0.5)
    with pytest.raises(DomainError):
        GigParams(-1.0, 1.0, 0.5)


def test_gig_beta_zero_is_gamma(rng):
    x = sample_gig(GigParams(4.0, 0.0, 2.0), rng, size=100_000)
    assert ks_statistic(x, stats.gamma(2.0, scale=0.5).cdf) < 0.01


def test_gig_alpha_zero_is_inverse_gamma(rng):
    # density x^(-3) exp(-1/x): 1/X ~ Gamma(2, rate 1)
    x = sample_gig(GigParams(0.0, 2.0, -2.0), rng, size=100_000)
    assert ks_statistic(1 / x, stats.gamma(2.0).cdf) < 0.01


def test_gig_reciprocal_property(rng):
    x = sample_gig(GigParams(3.0, 2.0, 0.5), rng, size=200_000)
    y = sample_gig(GigParams(2.0, 3.0, -0.5), rng, size=200_000)
    inv = 1 / y
    for f in (lambda v: v, np.log):
        a, b = f(x), f(inv)
        se = math.hypot(a.std(), b.std()) / math.sqrt(a.size)
        assert abs(a.mean() - b.mean()) < 3 * se


def _gig_mean_quadrature(p):
    f = lambda v: math.exp(gig_log_density(v, p))
    z = integrate.quad(f, 0, np.inf, limit=200)[0]
    m = integrate.quad(lambda v: v * f(v), 0, np.inf, limit=200)[0]
    m2 = integrate.quad(lambda v: v * v * f(v), 0, np.inf, limit=200)[0]
    return m / z, m2 / z - (m / z) ** 2


def test_gig_mean_matches_quadrature(rng):
    p = GigParams(2.0, 1.0, -1.0)
    mean, var = _gig_mean_quadrature(p)
    x = sample_gig(p, rng, size=200_000)
    assert abs(x.mean() - mean) < 3 * math.sqrt(var / x.size)


@pytest.mark.parametrize("alpha, beta, gam", [
    (2.0, 3.0, 0.5),      # ratio-of-uniforms without mode shift
    (1.0, 4.0, 5.0),      # with mode shift
    (0.001, 0.002, 0.1),  # small omega, hat regime
    (1.0, 1.0, -2.5),     # negative exponent, by reflection
    (50.0, 0.5, 30.0),
])
def test_gig_ks_all_regimes(rng, alpha, beta, gam):
    p = GigParams(alpha, beta, gam)
    x = sample_gig(p, rng, size=100_000)
    cdf = numeric_cdf(lambda v: gig_log_density(v, p), 1e-10, 1e6, n=800001, log_grid=True)
    assert ks_statistic(x, cdf) < 0.01


def test_gig_scalar_and_array_return(rng):
    p = GigParams(1.0, 1.0, 1.0)
    assert isinstance(sample_gig(p, rng), float)
    assert sample_gig(p, rng, size=(3, 2)).shape == (3, 2)


# ---------------------------------------------------------------- tie theta


def test_tie_mixture_weights_T1():
    shapes, logw = tie_mixture_components(1, 2.0)
    assert list(shapes) == [2.0, 3.0]
    # k=0: 2 * Gamma(2) / 2^2 = 0.5 ; k=1: Gamma(3) / 2^3 = 0.25
    assert np.exp(logw) == pytest.approx([2 / 3, 1 / 3], abs=1e-14)


def test_tie_mixture_T0_is_shifted_exponential(rng):
    x = sample_theta_tie_mixture(0, 1.7, rng, size=100_000)
    assert x.min() > 1
    assert ks_statistic(x - 1, stats.expon(scale=1 / 1.7).cdf) < 0.01


def test_tie_mixture_threshold_and_finiteness():
    with pytest.raises(ConfigurationError):
        sample_theta_tie_mixture(51, 10.0, make_rng(0))
    shapes, logw = tie_mixture_components(50, 1e-3)
    assert np.all(np.isfinite(logw)) and shapes.size == 51
    with pytest.raises(DomainError):
        tie_mixture_components(2, 0.0)


@pytest.mark.parametrize("T, S", [(3, 2.5), (10, 4.0), (50, 30.0)])
def test_tie_mixture_ks(rng, T, S):
    x = sample_theta_tie_mixture(T, S, rng, size=100_000)
    cdf = numeric_cdf(lambda v: tie_theta_log_density(v, T, S), 1.0, 1.0 + 60.0 * (T + 1) / S)
    assert ks_statistic(x, cdf) < 0.02


def test_tie_mh_rejects_proposals_below_one():
    rng = make_rng(1)
    theta = np.full(10_000, 1.0 + 1e-3)
    new, _ = sample_theta_tie_mh(theta, 2, 1.0, rng, sigma=0.5)
    assert np.all(new > 1)


def test_tie_mh_scalar_state(rng):
    th, acc = sample_theta_tie_mh(1.5, 3, 2.5, rng)
    assert isinstance(th, float) and acc in (0, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 40), st.floats(0.1, 50.0))
def test_tie_density_mixture_identity(T, S):
    # the mixture density equals the normalised target pointwise
    shapes, logw = tie_mixture_components(T, S)
    u = np.array([0.01, 0.3, 1.0, 4.0]) * (T + 1) / S
    mix = np.logaddexp.reduce(
        logw[:, None] + stats.gamma.logpdf(u[None, :], shapes[:, None], scale=1 / S), axis=0)
    target = tie_theta_log_density(1 + u, T, S)
    d = mix - target
    assert np.allclose(d, d[0], atol=1e-8)
