import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from condmean_lab.errors import EmptyFiberError, OutOfSupportError
from condmean_lab.fiber import (
    conditional_interval_prob_uniform,
    fiber_from_offsets,
    fiber_length_brute_force,
    fiber_lengths,
    fiber_through,
    sample_extremes,
)
from condmean_lab.sample import SampleVector, StandardGaussian, Uniform


def sv(values, a=0.0, ell=1.0):
    return SampleVector(values, Uniform(a, ell))


def test_sample_extremes():
    assert sample_extremes([0.2, 0.5, 0.8]) == (0.2, 0.8)
    assert sample_extremes([0.4] * 5) == (0.4, 0.4)
    with pytest.raises(ValueError):
        sample_extremes([])


def test_sample_extremes_against_scan():
    rng = np.random.default_rng(4)
    for _ in range(10_000):
        x = rng.normal(size=rng.integers(1, 20))
        lo = hi = x[0]
        for v in x[1:]:
            lo, hi = min(lo, v), max(hi, v)
        assert sample_extremes(x) == (lo, hi)


def test_constant_sample_spans_diagonal():
    f = fiber_through(sv([0.5] * 4))
    assert f.length == pytest.approx(2.0)
    assert f.xi_tilde_range == pytest.approx((0.0, 2.0))


def test_corner_fiber_is_a_point():
    f = fiber_through(sv([0.0, 1.0]))
    assert f.length == 0.0
    assert f.xi_tilde_range[0] == pytest.approx(f.xi_tilde_range[1])


def test_three_point_length():
    f = fiber_through(sv([0.2, 0.5, 0.8]))
    assert f.length == pytest.approx(0.4 * math.sqrt(3), abs=1e-15)
    assert f.length == pytest.approx(fiber_length_brute_force(f.Y, 0, 1), abs=1e-12)


def test_brute_force_examples():
    assert fiber_length_brute_force(np.zeros(3), 0, 1) == pytest.approx(2.0)
    assert fiber_length_brute_force([-1.0], 0, 1) == 0.0
    assert fiber_length_brute_force([1.5], 0, 1) == 0.0


def test_out_of_support_and_gaussian():
    with pytest.raises(OutOfSupportError):
        sv([0.5, 1.5])
    with pytest.raises(TypeError):
        fiber_through(SampleVector([0.1, 0.2], StandardGaussian()))


def test_formula_matches_clipping_oracle():
    rng = np.random.default_rng(5)
    for _ in range(20_000):
        N = int(rng.integers(2, 17))
        a, ell = rng.normal(), rng.uniform(0.1, 3)
        x = sv(a + ell * rng.random(N), a, ell)
        f = fiber_through(x)
        assert f.length == pytest.approx(fiber_length_brute_force(f.Y, a, ell), abs=1e-12)
        lo, hi = f.xi_tilde_range
        assert hi - lo == pytest.approx(f.length, abs=1e-12)
        assert 0 <= f.length <= ell * math.sqrt(N) + 1e-12


def test_batched_lengths_agree():
    X = np.random.default_rng(6).random((500, 5))
    expected = [fiber_through(sv(x)).length for x in X]
    np.testing.assert_allclose(fiber_lengths(X, 0, 1), expected, atol=1e-15)


@given(st.integers(2, 10), st.floats(-0.3, 0.3), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_fiber_constancy(N, shift, seed):
    x = 0.3 + 0.4 * np.random.default_rng(seed).random(N)
    f1, f2 = fiber_through(sv(x)), fiber_through(sv(x + shift))
    assert f1.length == pytest.approx(f2.length, abs=1e-12)
    np.testing.assert_allclose(f1.Y, f2.Y, atol=1e-12)
    assert f1.xi_tilde_range == pytest.approx(f2.xi_tilde_range, abs=1e-12)


@given(st.integers(2, 10), st.floats(-0.3, 0.3), st.integers(0, 2**32 - 1))
@settings(max_examples=200, deadline=None)
def test_xi_tilde_is_unit_speed(N, shift, seed):
    x = 0.3 + 0.4 * np.random.default_rng(seed).random(N)
    y = x + shift
    dist = np.linalg.norm(y - x)
    assert dist == pytest.approx(abs(y.sum() - x.sum()) / math.sqrt(N), abs=1e-12)


def test_conditional_prob_examples():
    f = fiber_through(sv([0.25, 0.25]))
    assert f.length == pytest.approx(math.sqrt(2))
    assert conditional_interval_prob_uniform(f, 0.5, 0.25) == pytest.approx(0.25, abs=1e-15)
    assert conditional_interval_prob_uniform(f, -1.0, 3.0) == 1.0
    assert conditional_interval_prob_uniform(f, 0.3, 0.0) == 0.0
    with pytest.raises(ValueError):
        conditional_interval_prob_uniform(f, 0.3, -0.1)


def test_conditional_prob_against_band_monte_carlo():
    # uniform square, condition on |X1 - X2| < 1e-3 (fiber Y=0 thickened)
    rng = np.random.default_rng(8)
    X = rng.random((4_000_000, 2))
    band = X[np.abs(X[:, 0] - X[:, 1]) < 1e-3]
    xi = band.mean(axis=1)
    p_band = np.mean((xi >= 0.5) & (xi <= 0.75))
    sigma = math.sqrt(0.25 * 0.75 / band.shape[0])
    assert abs(p_band - 0.25) < 4 * sigma + 1e-3


def test_point_mass_convention():
    f = fiber_through(sv([0.0, 1.0]))
    assert conditional_interval_prob_uniform(f, 0.4, 0.2) == 1.0
    assert conditional_interval_prob_uniform(f, 0.6, 0.2) == 0.0


def test_monotone_in_s():
    f = fiber_through(sv([0.1, 0.3, 0.35]))
    probs = [conditional_interval_prob_uniform(f, 0.2, s) for s in np.linspace(0, 1, 101)]
    assert all(0 <= p <= 1 for p in probs)
    assert all(b >= a for a, b in zip(probs, probs[1:]))


def test_fiber_from_offsets():
    f = fiber_from_offsets([0.2, -0.1], 0, 1)
    assert f.length == pytest.approx(math.sqrt(3) * 0.7)
    empty = fiber_from_offsets([1.2], 0, 1)
    assert empty.empty and empty.length == 0.0
    with pytest.raises(EmptyFiberError):
        conditional_interval_prob_uniform(empty, 0, 1)
