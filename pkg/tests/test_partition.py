import math

import numpy as np
import pytest

from condmean_lab.errors import InsufficientMassError, OutOfSupportError
from condmean_lab.partition import (
    CubeSampler,
    build_partition,
    cell_prob,
    cube_index_of,
    cube_indices,
    cube_prob,
    log_density_oscillation,
    random_halfspace_events,
    sandwich_alpha,
    sandwich_check,
    total_decomposition_check,
)
from condmean_lab.regularity import LambdaFunction
from condmean_lab.sample import StandardGaussian, Uniform, exponential_density


def test_build_partition_defaults():
    p = build_partition(0, 1, 3)
    assert p.M == 9
    assert p.width == pytest.approx(1 / 9)
    assert p.cell(1) == pytest.approx((0, 1 / 9))
    assert p.cells[-1][1] == pytest.approx(1.0)


def test_build_partition_example():
    p = build_partition(0, 1, 2, M=4)
    assert p.cells == pytest.approx([(0, 0.25), (0.25, 0.5), (0.5, 0.75), (0.75, 1.0)])


def test_cube_index_examples():
    p = build_partition(0, 1, 2, M=4)
    assert cube_index_of([0.3, 0.9], p) == (2, 4)
    assert cube_index_of([0.25, 1.0], p) == (2, 4)
    assert cube_index_of([0.0, 0.0], p) == (1, 1)
    with pytest.raises(OutOfSupportError):
        cube_index_of([-0.1, 0.5], p)


def test_cube_indices_agree_with_floor():
    p = build_partition(-1, 3, 4, M=7)
    X = -1 + 3 * np.random.default_rng(0).random((1000, 4))
    expected = np.floor((X + 1) / p.width).astype(int) + 1
    np.testing.assert_array_equal(cube_indices(X, p), np.minimum(expected, 7))


def test_cell_probabilities():
    p = build_partition(0, 1, 2, M=2)
    dist = exponential_density()
    # (sqrt(e) - 1) / (e - 1)
    assert cell_prob(dist, p, 1) == pytest.approx(0.3775406687981455, rel=1e-12)
    assert cell_prob(dist, p, 1) + cell_prob(dist, p, 2) == pytest.approx(1.0, abs=1e-12)
    assert cell_prob(Uniform(), build_partition(0, 1, 3), 4) == pytest.approx(1 / 9)
    assert cube_prob(Uniform(), p, (1, 2)) == pytest.approx(0.25)
    with pytest.raises(TypeError):
        cell_prob(StandardGaussian(), p, 1)


def test_oscillation_for_exponential_is_cell_width():
    dist, p = exponential_density(), build_partition(0, 1, 3)
    for k in (1, 5, 9):
        assert log_density_oscillation(dist, p, k) == pytest.approx(p.width, rel=1e-9)
    assert log_density_oscillation(Uniform(), p, 3) == 0.0


def test_conditional_sampler_stays_in_cube_and_matches_cdf():
    dist, p = exponential_density(), build_partition(0, 1, 2, M=3)
    true, uniform = CubeSampler(dist, p).sample((1, 3), 200_000, seed=4)
    lo1, hi1 = p.cell(1)
    lo3, hi3 = p.cell(3)
    assert np.all((true[:, 0] >= lo1) & (true[:, 0] <= hi1))
    assert np.all((true[:, 1] >= lo3) & (true[:, 1] <= hi3))
    assert np.all((uniform[:, 0] >= lo1) & (uniform[:, 0] <= hi1))
    mid = 0.5 * (lo3 + hi3)
    expected = (math.exp(mid) - math.exp(lo3)) / (math.exp(hi3) - math.exp(lo3))
    assert abs(np.mean(true[:, 1] <= mid) - expected) < 4 * math.sqrt(0.25 / 200_000)


def test_uniform_sandwich_is_exact():
    res = sandwich_check(Uniform(), (2, 3), lambda X: X.sum(axis=1) < 0.5, 10_000, seed=1)
    assert res.ratio == 1.0 and res.ok
    assert res.ratio_lo == res.ratio_hi == 1.0


def test_sandwich_constant_event():
    res = sandwich_check(exponential_density(), (1, 4, 2), lambda X: np.ones(X.shape[0], bool), 50_000, seed=2)
    assert res.ratio == 1.0 and res.ok


def test_sandwich_alpha_formula():
    dist = exponential_density()
    p = build_partition(0, 1, 3)
    assert sandwich_alpha(dist, 3, p) == pytest.approx(3 * 1.0 / 9)


def test_sandwich_midpoint_event_within_bounds():
    dist = exponential_density()
    p = build_partition(0, 1, 2)
    k = (2, 3)
    mid = np.mean([np.mean(p.cell(2)), np.mean(p.cell(3))])
    res = sandwich_check(dist, k, lambda X: X.mean(axis=1) < mid, 100_000, seed=3)
    assert res.ok
    assert res.ratio_lo <= res.ratio <= res.ratio_hi


def test_random_halfspace_events_pass():
    dist = exponential_density()
    p = build_partition(0, 1, 3)
    k = (2, 5, 9)
    for i, ev in enumerate(random_halfspace_events(3, p, k, 5, seed=7)):
        assert sandwich_check(dist, k, ev, 50_000, seed=7, tag=i).ok


def test_sandwich_needs_mass():
    with pytest.raises(InsufficientMassError):
        sandwich_check(Uniform(), (1, 1, 1), lambda X: X[:, 0] < 0.5, 100, seed=0)


def test_total_decomposition_uniform():
    chk = total_decomposition_check(Uniform(), 2, LambdaFunction.constant(0.5), 0.05, 200_000, seed=5, M=4)
    assert chk.ok
    assert chk.uncovered_mass == 0.0
    assert chk.cubes_used == 16
    # exact: P(mean of two uniforms in [0.5, 0.55])
    exact = 0.5 - 0.5 * (0.9) ** 2
    assert chk.stratified == pytest.approx(exact, abs=4 * chk.stratified_std_err)


def test_total_decomposition_falls_back_to_post_stratification():
    chk = total_decomposition_check(
        exponential_density(), 3, LambdaFunction.constant(0.55), 0.02, 300_000, seed=6, max_cubes=100
    )
    assert chk.ok
    assert chk.uncovered_mass < 0.01
    assert chk.sup_local >= chk.direct
