import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from condmean_lab.errors import DegenerateSampleError, OutOfSupportError
from condmean_lab.sample import (
    MeanFluctDecomp,
    SampleVector,
    SmoothDensity,
    Uniform,
    decompose,
    decompose_batch,
    eta_from_fiber_coordinates,
    exponential_density,
    helmert_matrix,
    helmert_transform,
    inverse_helmert_transform,
    reconstruct,
    truncated_gaussian_density,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
samples = st.integers(2, 64).flatmap(lambda n: arrays(np.float64, n, elements=finite))


def test_decompose_constant_sample():
    d = decompose([1.0, 1.0, 1.0, 1.0])
    assert d.xi == 1.0
    np.testing.assert_array_equal(d.eta, 0.0)
    np.testing.assert_array_equal(d.Y, [0.0, 0.0, 0.0])


def test_decompose_antisymmetric_pair():
    d = decompose(SampleVector([0.0, 1.0], Uniform(0, 1)))
    assert d.xi == 0.5
    assert d.xi_tilde == pytest.approx(0.5 * math.sqrt(2), abs=1e-15)
    np.testing.assert_allclose(d.eta, [-0.5, 0.5])
    np.testing.assert_allclose(d.Y, [-1.0])


def test_decompose_three_points():
    d = decompose([0.2, 0.5, 0.8])
    assert d.xi == pytest.approx(0.5, abs=1e-15)
    np.testing.assert_allclose(d.eta, [-0.3, 0.0, 0.3], atol=1e-15)
    np.testing.assert_allclose(d.Y, [-0.6, -0.3], atol=1e-15)
    np.testing.assert_allclose(reconstruct(d), [0.2, 0.5, 0.8], atol=1e-15)


def test_reconstruct_examples():
    np.testing.assert_allclose(reconstruct(MeanFluctDecomp(0.5, math.sqrt(2) * 0.5, np.zeros(2), np.zeros(1))),
                               [0.5, 0.5])
    d = MeanFluctDecomp(0.5, 0.5 * math.sqrt(3), np.array([-0.3, 0.0, 0.3]), np.array([-0.6, -0.3]))
    np.testing.assert_allclose(reconstruct(d), [0.2, 0.5, 0.8], atol=1e-15)


def test_round_trip_10k_samples():
    rng = np.random.default_rng(1)
    worst = 0.0
    for _ in range(10_000):
        x = rng.uniform(-5, 5, rng.integers(2, 65))
        worst = max(worst, np.max(np.abs(reconstruct(decompose(x)) - x)) / np.max(np.abs(x)))
    assert worst < 1e-12


def test_rejects_single_coordinate():
    with pytest.raises(DegenerateSampleError):
        decompose([1.0])
    with pytest.raises(DegenerateSampleError):
        SampleVector([0.3], Uniform())


def test_sample_vector_support():
    with pytest.raises(OutOfSupportError):
        SampleVector([0.2, 1.2], Uniform(0, 1))
    x = SampleVector([0.0, 1.0], Uniform(0, 1))
    assert x.N == 2
    with pytest.raises(ValueError):
        x.values[0] = 3.0


@given(samples)
@settings(max_examples=200, deadline=None)
def test_decomposition_invariants(x):
    d = decompose(x)
    scale = max(1.0, float(np.max(np.abs(x))))
    assert abs(d.eta.sum()) <= 1e-12 * x.size * scale
    assert d.xi_tilde == pytest.approx(math.sqrt(x.size) * d.xi, rel=1e-15, abs=1e-300)
    np.testing.assert_allclose(d.Y, x[:-1] - x[-1], rtol=0, atol=1e-12 * scale)
    np.testing.assert_allclose(d.xi + d.eta, x, rtol=0, atol=1e-12 * scale)


@given(samples, finite)
@settings(max_examples=200, deadline=None)
def test_translation_covariance(x, shift):
    base, moved = decompose(x), decompose(x + shift)
    scale = max(1.0, float(np.max(np.abs(x))), abs(shift))
    np.testing.assert_allclose(moved.eta, base.eta, atol=1e-12 * scale)
    np.testing.assert_allclose(moved.Y, base.Y, atol=1e-12 * scale)


@pytest.mark.parametrize("N", range(2, 65))
def test_helmert_orthogonal(N):
    H = helmert_matrix(N)
    np.testing.assert_allclose(H @ H.T, np.eye(N), atol=1e-12)


def test_helmert_examples():
    np.testing.assert_allclose(helmert_transform([0.0, 1.0]), [1 / math.sqrt(2), -1 / math.sqrt(2)], atol=1e-15)
    c = 0.7
    z = helmert_transform(np.full(5, c))
    assert z[0] == pytest.approx(c * math.sqrt(5))
    np.testing.assert_allclose(z[1:], 0.0, atol=1e-15)


def test_helmert_isometry_and_first_coordinate():
    rng = np.random.default_rng(2)
    for _ in range(10_000):
        x = rng.normal(size=rng.integers(2, 65))
        z = helmert_transform(x)
        assert abs(np.linalg.norm(z) - np.linalg.norm(x)) <= 1e-12 * np.linalg.norm(x)
        assert z[0] == pytest.approx(math.sqrt(x.size) * x.mean(), rel=1e-12, abs=1e-12)
        np.testing.assert_allclose(inverse_helmert_transform(z), x, atol=1e-12 * np.abs(x).max())


def test_eta_from_fiber_coordinates_matches_decompose():
    X = np.random.default_rng(3).random((50, 6))
    _, _, eta, Y = decompose_batch(X)
    np.testing.assert_allclose(eta_from_fiber_coordinates(Y), eta, atol=1e-14)


def test_smooth_density_checks():
    d = exponential_density()
    assert d.rho_bar == pytest.approx(math.e / (math.e - 1), rel=1e-12)
    assert d.mass(0, 1) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError, match="integrates"):
        SmoothDensity(0, 1, lambda v: 2.0 * np.ones_like(v), 0.0)
    with pytest.raises(ValueError, match="declared"):
        SmoothDensity(0, 1, lambda v: np.exp(v) / (math.e - 1), 0.5)
    with pytest.raises(ValueError, match="positive"):
        SmoothDensity(0, 1, lambda v: 3.0 * (2.0 * v - 1.0) ** 2, 10.0)
    tg = truncated_gaussian_density(0.5, 0.3)
    assert tg.log_deriv_bound == pytest.approx(0.5 / 0.09)
