"""Partition of the support into ``M`` equal cells and the induced cube partition.

Cells are ``J_k = [a + (k-1) ell/M, a + k ell/M]`` for ``k = 1..M`` and a
cube is indexed by ``k = (k_1, ..., k_N)``.  Points are assigned to cells
left-closed / right-open, with the top endpoint clamped into cell ``M``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InsufficientMassError, OutOfSupportError
from .mc import block_generator, sample_range
from .regularity import LambdaFunction, hit_event, interval_hit_prob
from .sample import Distribution, SampleVector, SmoothDensity, Uniform

STREAM_CUBE = 1
STREAM_STRATA = 2

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class SupportPartition:
    a: float
    ell: float
    M: int

    @property
    def width(self) -> float:
        return self.ell / self.M

    def cell(self, k: int) -> tuple[float, float]:
        if not 1 <= k <= self.M:
            raise IndexError(f"cell index {k} outside 1..{self.M}")
        return (self.a + (k - 1) * self.width, self.a + k * self.width)

    @property
    def cells(self) -> list[tuple[float, float]]:
        return [self.cell(k) for k in range(1, self.M + 1)]


def build_partition(a: float, ell: float, N: int, M: int | None = None) -> SupportPartition:
    """Equal-width partition of ``[a, a + ell]``; ``M`` defaults to ``N**2``."""
    if not ell > 0:
        raise ValueError("ell must be positive")
    M = N * N if M is None else int(M)
    if M < 1:
        raise ValueError("M must be at least 1")
    return SupportPartition(float(a), float(ell), M)


def cube_indices(X: np.ndarray, p: SupportPartition) -> np.ndarray:
    """1-based cell indices for every coordinate of a batch ``(n, N)``."""
    X = np.asarray(X, dtype=float)
    if np.any(X < p.a) or np.any(X > p.a + p.ell):
        raise OutOfSupportError("sample leaves the partitioned support")
    k = np.floor((X - p.a) * p.M / p.ell).astype(np.int64) + 1
    return np.minimum(k, p.M)


def cube_index_of(x, p: SupportPartition) -> tuple[int, ...]:
    values = x.values if isinstance(x, SampleVector) else np.asarray(x, dtype=float)
    return tuple(int(k) for k in cube_indices(values[None, :], p)[0])


def _require_compact(dist: Distribution) -> None:
    if not isinstance(dist, (Uniform, SmoothDensity)):
        raise TypeError("partitions need a law with compact support [a, a+ell]")


def cell_prob(dist: Distribution, p: SupportPartition, k: int) -> float:
    """Probability of cell ``k`` (quadrature for smooth densities)."""
    _require_compact(dist)
    lo, hi = p.cell(k)
    if isinstance(dist, Uniform):
        lo, hi = max(lo, dist.a), min(hi, dist.a + dist.ell)
        return max(0.0, hi - lo) / dist.ell
    return dist.mass(lo, hi)


def cube_prob(dist: Distribution, p: SupportPartition, k: Sequence[int]) -> float:
    cells = {}
    prob = 1.0
    for ki in k:
        if ki not in cells:
            cells[ki] = cell_prob(dist, p, ki)
        prob *= cells[ki]
    return prob


def log_density_oscillation(dist: Distribution, p: SupportPartition, k: int, probe: int = 1001) -> float:
    """``max |ln rho(x) - ln rho(left end)|`` over a probe grid of cell ``k``."""
    _require_compact(dist)
    lo, hi = p.cell(k)
    grid = np.linspace(lo, hi, probe)
    rho = dist.pdf(grid)
    if np.any(rho <= 0):
        raise ValueError(f"density is not positive on cell {k}")
    logs = np.log(rho)
    return float(np.max(np.abs(logs - logs[0])))


class _CellInverseCdf:
    """Inverse CDF of ``rho`` restricted to one cell.

    Cumulative masses are tabulated with 8-point Gauss-Legendre on a fine
    sub-grid; inversion interpolates and polishes with Newton steps.
    """

    def __init__(self, dist: SmoothDensity, lo: float, hi: float, nodes: int = 129):
        self.dist = dist
        self.x = np.linspace(lo, hi, nodes)
        masses = self._gl(self.x[:-1], self.x[1:])
        self.cdf = np.concatenate([[0.0], np.cumsum(masses)])
        self.total = self.cdf[-1]

    def _gl(self, p, q):
        half = 0.5 * (q - p)
        pts = (p + half)[..., None] + half[..., None] * _GL_NODES
        return half * (self.dist.pdf(pts) @ _GL_WEIGHTS)

    def __call__(self, u: np.ndarray) -> np.ndarray:
        target = u * self.total
        idx = np.clip(np.searchsorted(self.cdf, target, side="right") - 1, 0, self.x.size - 2)
        left, right = self.x[idx], self.x[idx + 1]
        base = self.cdf[idx]
        span = self.cdf[idx + 1] - base
        x = left + (target - base) / span * (right - left)
        for _ in range(3):
            err = base + self._gl(left, x) - target
            x = np.clip(x - err / self.dist.pdf(x), left, right)
        return x


class CubeSampler:
    """Samples the true law conditioned on a cube and the uniform law on it.

    Both laws are driven by the same uniforms, so for a uniform marginal
    the two samples coincide.
    """

    def __init__(self, dist: Distribution, p: SupportPartition):
        _require_compact(dist)
        self.dist, self.partition = dist, p
        self._inverse: dict[int, _CellInverseCdf] = {}

    def _cell_inverse(self, k: int) -> _CellInverseCdf:
        if k not in self._inverse:
            self._inverse[k] = _CellInverseCdf(self.dist, *self.partition.cell(k))
        return self._inverse[k]

    def sample(self, k: Sequence[int], n: int, seed: int, stream: int = STREAM_CUBE, tag: int = 0):
        """Return ``(true_law, uniform_law)`` samples of shape ``(n, N)``."""
        gen = block_generator(seed, stream, tag, *k)
        U = gen.random((n, len(k)))
        width = self.partition.width
        lows = np.array([self.partition.cell(ki)[0] for ki in k])
        uniform = lows + width * U
        if isinstance(self.dist, Uniform):
            return uniform, uniform
        true = np.empty_like(U)
        for i, ki in enumerate(k):
            true[:, i] = self._cell_inverse(ki)(U[:, i])
        return true, uniform


def sandwich_alpha(dist: Distribution, N: int, p: SupportPartition) -> float:
    """Log-density oscillation bound over a cube: ``N * C' * ell / M``."""
    c_prime = dist.log_deriv_bound if isinstance(dist, SmoothDensity) else 0.0
    return N * c_prime * p.width


@dataclass(frozen=True)
class SandwichResult:
    p_true: float
    p_uniform: float
    ratio: float
    ratio_lo: float
    ratio_hi: float
    sigma: float
    ok: bool


def sandwich_check(
    dist: Distribution,
    k: Sequence[int],
    event: Callable[[np.ndarray], np.ndarray],
    trials: int,
    seed: int,
    M: int | None = None,
    tag: int = 0,
) -> SandwichResult:
    """Compare ``P_k(event)`` (true law on cube ``k``) with the uniform law on the cube.

    The measured probabilities must satisfy
    ``exp(-2 alpha) P_unif - 3 sigma <= P_k <= exp(2 alpha) P_unif + 3 sigma``.
    """
    k = tuple(int(v) for v in k)
    N = len(k)
    _require_compact(dist)
    a, hi = dist.support
    p = build_partition(a, hi - a, N, M)
    mass = cube_prob(dist, p, k)
    if mass * trials < 10:
        raise InsufficientMassError(f"cube {k} has probability {mass:.3g}; fewer than 10 expected hits in {trials} trials")
    true, uniform = CubeSampler(dist, p).sample(k, trials, seed, tag=tag)
    p_true = float(np.mean(event(true)))
    p_unif = float(np.mean(event(uniform)))
    alpha = sandwich_alpha(dist, N, p)
    lo, hi_ratio = math.exp(-2 * alpha), math.exp(2 * alpha)
    sigma = math.sqrt(p_true * (1 - p_true) / trials + hi_ratio**2 * p_unif * (1 - p_unif) / trials)
    ok = (lo * p_unif - 3 * sigma <= p_true <= hi_ratio * p_unif + 3 * sigma)
    ratio = p_true / p_unif if p_unif > 0 else (1.0 if p_true == 0 else math.inf)
    return SandwichResult(p_true, p_unif, ratio, lo, hi_ratio, sigma, bool(ok))


def random_halfspace_events(N: int, p: SupportPartition, k: Sequence[int], count: int, seed: int):
    """Random half-space events ``w . x < c`` cutting through cube ``k``."""
    gen = block_generator(seed, 99, 0, *k)
    lows = np.array([p.cell(ki)[0] for ki in k])
    events = []
    for _ in range(count):
        w = gen.standard_normal(N)
        anchor = lows + p.width * gen.uniform(0.2, 0.8, N)
        c = float(w @ anchor)
        events.append(lambda X, w=w, c=c: X @ w < c)
    return events


@dataclass(frozen=True)
class DecompositionCheck:
    direct: float
    direct_std_err: float
    stratified: float
    stratified_std_err: float
    sup_local: float
    uncovered_mass: float
    cubes_used: int
    ok: bool


def total_decomposition_check(
    dist: Distribution,
    N: int,
    lam: LambdaFunction,
    s: float,
    trials: int,
    seed: int,
    M: int | None = None,
    workers: int | None = None,
    max_cubes: int = 4096,
) -> DecompositionCheck:
    """Direct estimate of the hit probability versus ``sum_k p_k P_k(hit)``.

    With at most ``max_cubes`` cubes each cube is sampled conditionally
    (allocation proportional to its exact mass, cubes with under 10
    expected trials skipped and their mass reported as uncovered).  Larger
    partitions fall back to post-stratifying the direct samples over the
    cubes they hit.
    """
    _require_compact(dist)
    a, hi = dist.support
    p = build_partition(a, hi - a, N, M)
    direct = interval_hit_prob(dist, N, lam, s, trials, seed, workers)
    event = hit_event(lam, s)
    cell_mass = np.array([cell_prob(dist, p, kk) for kk in range(1, p.M + 1)])

    strat, var, sup_local, uncovered, used = 0.0, 0.0, 0.0, 0.0, 0
    if p.M**N <= max_cubes:
        sampler = CubeSampler(dist, p)
        for flat, k in enumerate(itertools.product(range(1, p.M + 1), repeat=N)):
            pk = float(np.prod(cell_mass[np.array(k) - 1]))
            n_k = int(round(trials * pk))
            if n_k < 10:
                uncovered += pk
                continue
            true, _ = sampler.sample(k, n_k, seed, stream=STREAM_STRATA, tag=flat)
            hit = float(np.mean(event(true)))
            strat += pk * hit
            var += pk * pk * hit * (1 - hit) / n_k
            sup_local = max(sup_local, hit)
            used += 1
    else:
        X = sample_range(dist, N, 0, trials, seed)
        idx = cube_indices(X, p)
        hits = event(X)
        keys, inverse, counts = np.unique(idx, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        hit_counts = np.bincount(inverse, weights=hits.astype(float), minlength=keys.shape[0])
        covered = 0.0
        for key, n_k, h in zip(keys, counts, hit_counts):
            pk = float(np.prod(cell_mass[key - 1]))
            if n_k < 10:
                continue
            frac = h / n_k
            strat += pk * frac
            var += pk * pk * frac * (1 - frac) / n_k
            sup_local = max(sup_local, frac)
            covered += pk
            used += 1
        uncovered = max(0.0, 1.0 - covered)

    sigma = math.sqrt(direct.std_err**2 + var)
    # direct <= sup_local * covered + uncovered
    sup_ok = sup_local * (1.0 - uncovered) + uncovered >= direct.p_hat - 3 * direct.std_err
    ok = abs(strat - direct.p_hat) <= 3 * sigma + uncovered and sup_ok
    return DecompositionCheck(direct.p_hat, direct.std_err, strat, math.sqrt(var), sup_local, uncovered, used, bool(ok))
