import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phi3lab import fluctuation as fl
from phi3lab.errors import FactorizationFailure
from phi3lab.spectral import half_modes, sample_free_field


@pytest.fixture(scope="module")
def k16():
    return fl.build_kernel(16.0)


def test_weights_vanish_at_zero_and_are_radial(k16):
    assert k16.weights[0] == 0.0
    assert k16.weight(3, 4) == pytest.approx(k16.weight(5, 0), rel=1e-14)
    assert k16.weight(100, 0) == 0.0


def test_truncation_radius_scales_like_sqrt_q():
    ratios = [fl.build_kernel(q).truncation_radius / math.sqrt(q) for q in (4.0, 16.0, 64.0)]
    assert max(ratios) / min(ratios) < 1.5


def test_tail_certificate(k16):
    assert k16.tail_bound < 1e-12
    R = k16.truncation_radius
    wide = half_modes(int(1.5 * R) + 1)
    w = fl._weights(k16.q, k16.sigma, wide)
    mult = np.where(np.arange(len(w)) == 0, 1.0, 2.0)
    assert abs(0.5 * np.sum(mult * w * w) / fl.variance(k16) - 1) < 1e-10


def test_time_factor(k16):
    assert fl.variance(fl.with_time(k16, 1.0)) == pytest.approx(2 * fl.variance(k16), rel=1e-15)


def test_variance_approaches_limit():
    lim = fl.variance_limit()
    ratios = [fl.variance(fl.build_kernel(q)) / q ** 2 for q in (16.0, 64.0, 256.0)]
    assert all(a < b < lim for a, b in zip(ratios, ratios[1:]))
    gaps = [lim - r for r in ratios]
    assert gaps[2] < 0.5 * gaps[0]


def test_spectral_sample_variance(k16):
    x = fl.sample_phi_batch(k16, [(0.7, 1.9)], range(10000))[:, 0]
    assert np.var(x) == pytest.approx(fl.variance(k16), rel=0.05)
    assert abs(x.mean()) < 4 * math.sqrt(fl.variance(k16) / 10000)


def test_covariance_basic(k16):
    assert fl.covariance_exact(k16, (0.0, 0.0)) == pytest.approx(fl.variance(k16), rel=1e-14)
    d = (0.4, -1.3)
    assert fl.covariance_exact(k16, d) == pytest.approx(fl.covariance_exact(k16, (-0.4, 1.3)), rel=1e-13)
    assert fl.correlation(k16, (0.0, 0.0)) == pytest.approx(1.0, abs=1e-14)


def test_exact_matches_poisson(k16):
    for d in [(math.pi, 0.0), (0.0, 0.0), (0.3, 0.2), (1.0, 2.0), (math.pi, math.pi)]:
        a, b = fl.covariance_exact(k16, d), fl.covariance_poisson(k16, d)
        assert abs(a - b) < 1e-3 * abs(a) + 1e-10 * fl.variance(k16)
    assert fl.covariance_poisson(k16, (0.0, 0.0)) == pytest.approx(fl.variance(k16), rel=1e-4)


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_correlation_bounded(a, b):
    k = fl.build_kernel(16.0)
    assert -1 - 1e-8 <= fl.correlation(k, (a, b)) <= 1 + 1e-8


def test_stationarity(k16):
    gen = np.random.default_rng(5)
    for _ in range(10):
        x, y, s = gen.uniform(0, 2 * math.pi, (3, 2))
        g1 = fl.build_gram(k16, [x, y]).matrix[0, 1]
        g2 = fl.build_gram(k16, [x + s, y + s]).matrix[0, 1]
        assert abs(g1 - g2) < 1e-10 * fl.variance(k16)
        assert abs(g1 - fl.covariance_exact(k16, y - x)) < 1e-10 * fl.variance(k16)


def test_gram_invariants(k16):
    pts = np.random.default_rng(1).uniform(0, 2 * math.pi, (30, 2))
    g = fl.build_gram(k16, pts)
    assert np.allclose(g.matrix, g.matrix.T, atol=0)
    assert np.max(np.abs(np.diag(g.matrix) - fl.variance(k16))) < 1e-10 * fl.variance(k16)
    assert np.linalg.eigvalsh(g.matrix)[0] > -1e-8 * np.trace(g.matrix) / 30
    L = g.factor()
    assert np.max(np.abs(L @ L.T - g.matrix)) < 1e-9 * fl.variance(k16)


def test_indefinite_gram_rejected():
    g = fl.CovarianceGram(np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 1.0]]), 16.0, 1)
    with pytest.raises(FactorizationFailure):
        g.factor()


def test_duplicate_points_rejected(k16):
    with pytest.raises(ValueError):
        fl.sample_phi(k16, [(1.0, 1.0), (1.0, 1.0)], 0)
    with pytest.raises(ValueError):
        fl.build_gram(k16, [(0.0, 0.0), (2 * math.pi, 0.0)])


def test_phi_from_free_field_sample_matches_spectral_path(k16):
    f = sample_free_field(k16.truncation_radius, 0.5, 123)
    x = np.array([0.3, 2.2])
    assert fl.phi_from_field(k16, f, x) == pytest.approx(fl.sample_phi(k16, [x], 123)[0], rel=1e-12)


def test_grid_sampler_matches_point_sampler(k16):
    M = 16
    F = fl.sample_phi_grid(k16, M, 9)
    x = 2 * math.pi * np.array([3, 5]) / M
    assert F[3, 5] == pytest.approx(fl.sample_phi(k16, [x], 9)[0], rel=1e-10)


def test_decay_fit_bounds_samples(k16):
    M, C = fl.decay_exponent(k16)
    u = np.linspace(2, 20, 40)
    vals = np.abs(fl.poisson_image(k16, u / 4.0))
    assert np.all(vals <= C * 16 ** 2 / (1 + u) ** M * (1 + 1e-9))


# Properties that the exact Fourier sums show to be false at desk-scale q.

@pytest.mark.xfail(strict=True, reason="image sum is not negligible at q=16: f̂ decays on the unit scale, not q^-1/2")
def test_single_image_suffices_at_half_period(k16):
    a = fl.covariance_poisson(k16, (math.pi, 0.0), K=0)
    b = fl.covariance_poisson(k16, (math.pi, 0.0), K=3)
    assert abs(a - b) < 1e-6 * abs(b)


@pytest.mark.xfail(strict=True, reason="f̂ decays like |x|^-1.3 on [2, 20]·q^-1/2 at q=16 (oscillating Bessel envelope)")
def test_polynomial_decay_exponent_at_least_four(k16):
    assert fl.decay_exponent(k16)[0] >= 4


@pytest.mark.xfail(strict=True, reason="corr at one correlation length is about 0.95 at q=64")
def test_correlation_small_at_one_correlation_length():
    k = fl.build_kernel(64.0)
    assert abs(fl.correlation(k, (math.sqrt(math.log(64.0)) / 8, 0.0))) < 0.2
