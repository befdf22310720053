import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from condmean_lab.errors import PreconditionError
from condmean_lab.fiber import fiber_through
from condmean_lab.regularity import (
    LambdaFunction,
    calibrate_smooth_constant,
    check_purity,
    continuity_modulus_uniform,
    gaussian_interval_bound,
    gaussian_interval_prob,
    interval_hit_prob,
    interval_hit_probs,
    smooth_theorem_bound,
    theorem_bound_uniform,
)
from condmean_lab.sample import SampleVector, StandardGaussian, Uniform, exponential_density


def test_modulus_examples():
    f = fiber_through(SampleVector([0.25, 0.25], Uniform()))
    assert continuity_modulus_uniform(f, 0.1) == pytest.approx(0.1)
    corner = fiber_through(SampleVector([0.0, 1.0], Uniform()))
    assert continuity_modulus_uniform(corner, 1e-9) == 1.0
    f3 = fiber_through(SampleVector([0.2, 0.5, 0.8], Uniform()))
    assert continuity_modulus_uniform(f3, 0.1) == pytest.approx(0.25)
    assert continuity_modulus_uniform(f3, 10.0) == 1.0


def test_theorem_bound_examples():
    assert theorem_bound_uniform(2, 1, 0.01) == pytest.approx(0.24)
    assert theorem_bound_uniform(4, 2, 1e-3) == pytest.approx(0.096)
    for s in (0.0, -0.1, 1.5):
        with pytest.raises(PreconditionError):
            theorem_bound_uniform(3, 1, s)


def test_gaussian_bound_example():
    assert gaussian_interval_bound(4, 0.1) == pytest.approx(0.07978845608028655, rel=1e-14)
    assert gaussian_interval_prob(4, -0.05, 0.1) <= gaussian_interval_bound(4, 0.1)


def test_smooth_bound_window():
    assert smooth_theorem_bound(2.0, 3, 0.05, 1.0) == pytest.approx(0.3)
    with pytest.raises(PreconditionError):
        smooth_theorem_bound(2.0, 3, 1 / 9, 1.0)
    with pytest.raises(PreconditionError):
        smooth_theorem_bound(2.0, 3, 0.0, 1.0)


def test_gaussian_hit_ignores_fluctuations():
    # constant and fluctuation-dependent endpoints agree when xi is independent of Y
    N, s, t = 4, 0.1, 0.0
    exact = gaussian_interval_prob(N, t, s)
    sq = LambdaFunction.user(lambda Y: t + 0.0 * (Y**2).sum(axis=1), "t+0*|Y|^2")
    const, same = interval_hit_probs(StandardGaussian(), N, [(LambdaFunction.constant(t), s), (sq, s)], 400_000, 3)
    assert const.successes == same.successes
    assert abs(const.p_hat - exact) < 4 * math.sqrt(exact * (1 - exact) / 400_000)


def test_monotone_in_s_with_shared_samples():
    lam = LambdaFunction.clamped_mean_square(0.0, 1.0)
    ss = [0.001, 0.003, 0.01, 0.03, 0.1]
    est = interval_hit_probs(Uniform(), 3, [(lam, s) for s in ss], 50_000, 5)
    counts = [e.successes for e in est]
    assert counts == sorted(counts)


@pytest.mark.parametrize("N", [2, 3, 5])
def test_uniform_hit_below_theorem_bound(N):
    s = 1e-3
    for lam in (LambdaFunction.constant(0.5), LambdaFunction.fiber_midpoint(0.0, 1.0, s)):
        est = interval_hit_prob(Uniform(), N, lam, s, 100_000, 8)
        assert est.p_hat <= theorem_bound_uniform(N, 1.0, s)


def test_fiber_midpoint_centres_interval():
    lam = LambdaFunction.fiber_midpoint(0.0, 1.0, 0.0)
    x = np.array([[0.1, 0.3, 0.2]])
    Y = x[:, :-1] - x[:, -1:]
    # midpoint of the fiber through x in the unit cube: shift so min and max are symmetric
    shift = 0.5 * (1 - x.min() - x.max())
    assert lam(Y)[0] == pytest.approx(x.mean() + shift)


@given(st.integers(2, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_builtin_lambdas_are_pure(N, seed):
    Y = np.random.default_rng(seed).uniform(-1, 1, (7, N - 1))
    for lam in (LambdaFunction.constant(0.3), LambdaFunction.quadratic_eta(),
                LambdaFunction.clamped_mean_square(0, 1), LambdaFunction.fiber_midpoint(0, 1, 0.01)):
        assert check_purity(lam, Y)


def test_quadratic_eta_for_pairs():
    x = np.array([[0.3, -0.5]])
    assert LambdaFunction.quadratic_eta()(x[:, :1] - x[:, 1:])[0] == pytest.approx(0.16)


def test_negative_s_rejected():
    with pytest.raises(ValueError):
        interval_hit_prob(Uniform(), 2, LambdaFunction.constant(0.5), -0.1, 1000, 0)


def test_smooth_calibration_is_finite():
    dist = exponential_density()
    cal = calibrate_smooth_constant(
        dist, [2, 3], [0.1, 0.5],
        lambda N, s: [LambdaFunction.constant(dist.mean() - s / 2)],
        40_000, 13,
    )
    assert cal.stable
    assert set(cal.per_N) == {2, 3}
    assert 0.3 < cal.global_C < 3
