"""Deterministic Monte Carlo over IID samples.

Trials are grouped into fixed blocks of ``BLOCK_SIZE`` consecutive trial
indices.  Block ``b`` of stream ``stream`` draws from a Philox generator
keyed by ``SeedSequence([seed, stream, b])``, so the sample of trial ``i``
is a pure function of ``(dist, N, i, seed)``.  Any split of the trial
range (across chunks or worker threads) reproduces the same samples, and
integer success counts merge exactly.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateSampleError, SamplingError
from .sample import Distribution, SampleVector, SmoothDensity, StandardGaussian, Uniform

BLOCK_SIZE = 4096
MAX_REJECTION_PROPOSALS = 10**6
Z95 = NormalDist().inv_cdf(0.975)

STREAM_IID = 0

Event = Callable[[np.ndarray], np.ndarray]


def worker_count(workers: int | None = None) -> int:
    """Resolve the worker count: explicit value, then ``CONDMEAN_THREADS``, then all cores."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("CONDMEAN_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def block_generator(seed: int, stream: int, block: int, *extra: int) -> np.random.Generator:
    entropy = [_check_seed(seed), int(stream), int(block), *map(int, extra)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _rejection_draws(dist: SmoothDensity, gen: np.random.Generator, count: int) -> np.ndarray:
    a, ell = dist.a, dist.ell
    ceiling = dist.rho_bar * (1 + 1e-12)
    accept_rate = 1.0 / (ell * ceiling)
    out = np.empty(count)
    filled = 0
    proposals = 0
    while filled < count:
        need = count - filled
        batch = max(64, int(math.ceil(1.2 * need / accept_rate)) + 16)
        v = a + ell * gen.random(batch)
        u = ceiling * gen.random(batch)
        rho = dist.pdf(v)
        if np.any(rho > ceiling):
            raise SamplingError(
                f"density {dist.name!r} exceeds its probed maximum {dist.rho_bar:.6g} "
                f"(found {float(rho.max()):.6g}); rejection envelope invalid"
            )
        proposals += batch
        accepted = v[u < rho]
        take = min(need, accepted.size)
        out[filled:filled + take] = accepted[:take]
        filled += take
        if filled == 0 and proposals >= MAX_REJECTION_PROPOSALS:
            raise SamplingError(
                f"no acceptance after {proposals} proposals for density {dist.name!r}; "
                "check normalization against rho_bar"
            )
    return out


def draw(dist: Distribution, gen: np.random.Generator, shape) -> np.ndarray:
    """Draw an array of IID values from ``dist`` using ``gen``."""
    if isinstance(dist, Uniform):
        return dist.a + dist.ell * gen.random(shape)
    if isinstance(dist, StandardGaussian):
        return gen.standard_normal(shape)
    if isinstance(dist, SmoothDensity):
        return _rejection_draws(dist, gen, int(np.prod(shape))).reshape(shape)
    raise TypeError(f"unsupported distribution {dist!r}")


def sample_block(dist: Distribution, N: int, block: int, seed: int) -> np.ndarray:
    """All ``BLOCK_SIZE`` samples of one block, shape ``(BLOCK_SIZE, N)``."""
    if N < 2:
        raise DegenerateSampleError("samples need N >= 2")
    gen = block_generator(seed, STREAM_IID, block)
    return draw(dist, gen, (BLOCK_SIZE, N))


def sample_iid(dist: Distribution, N: int, trial_index: int, seed: int) -> SampleVector:
    """The sample of trial ``trial_index``; deterministic in all arguments."""
    block, offset = divmod(int(trial_index), BLOCK_SIZE)
    return SampleVector(sample_block(dist, N, block, seed)[offset], dist)


def sample_range(dist: Distribution, N: int, start: int, stop: int, seed: int) -> np.ndarray:
    """Samples of trials ``start .. stop-1`` stacked row-wise."""
    parts = []
    for block, lo, hi in _block_slices(start, stop):
        parts.append(sample_block(dist, N, block, seed)[lo:hi])
    if not parts:
        return np.empty((0, N))
    return np.concatenate(parts, axis=0)


def _block_slices(start: int, stop: int):
    b0 = start // BLOCK_SIZE
    b1 = (stop - 1) // BLOCK_SIZE if stop > start else b0 - 1
    for block in range(b0, b1 + 1):
        lo = max(start - block * BLOCK_SIZE, 0)
        hi = min(stop - block * BLOCK_SIZE, BLOCK_SIZE)
        yield block, lo, hi


def reduce_trials(
    dist: Distribution,
    N: int,
    statistic: Callable[[np.ndarray], np.ndarray],
    trials: int,
    seed: int,
    *,
    start: int = 0,
    workers: int | None = None,
) -> np.ndarray:
    """Sum an integer-valued ``statistic`` over trials ``start .. start+trials-1``.

    ``statistic`` maps a batch of samples ``(n, N)`` to an integer array
    whose leading axis is summed (or to an already-summed array).  The
    result is independent of the worker count.
    """
    stop = start + int(trials)
    pieces = list(_block_slices(start, stop))

    def run(piece):
        block, lo, hi = piece
        X = sample_block(dist, N, block, seed)[lo:hi]
        out = np.asarray(statistic(X))
        if out.dtype.kind not in "biu":
            raise TypeError("statistic must return integer or boolean values")
        return out.astype(np.int64).sum(axis=0) if out.ndim else out.astype(np.int64)

    n_workers = min(worker_count(workers), len(pieces)) or 1
    if n_workers == 1:
        results = [run(p) for p in pieces]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run, pieces))
    total = results[0].copy()
    for r in results[1:]:
        total += r
    return total


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


@dataclass(frozen=True)
class McEstimate:
    """Bernoulli-mean estimate with Wilson 95% interval."""

    p_hat: float
    trials: int
    successes: int
    std_err: float
    ci95: tuple[float, float]
    seed: int

    @classmethod
    def from_counts(cls, successes: int, trials: int, seed: int) -> "McEstimate":
        successes, trials = int(successes), int(trials)
        p = successes / trials
        return cls(p, trials, successes, math.sqrt(p * (1 - p) / trials), wilson_interval(successes, trials), seed)

    def merge(self, other: "McEstimate") -> "McEstimate":
        """Pool two estimates over disjoint trial ranges."""
        return McEstimate.from_counts(self.successes + other.successes, self.trials + other.trials, self.seed)


def count_events(dist, N, event: Event, start: int, stop: int, seed: int, workers=None) -> int:
    """Number of trials in ``start .. stop-1`` where ``event`` holds."""
    return int(reduce_trials(dist, N, lambda X: np.asarray(event(X), dtype=bool), stop - start, seed,
                             start=start, workers=workers))


def estimate_event_probs(
    dist: Distribution,
    N: int,
    events: Sequence[Event],
    trials: int,
    seed: int,
    workers: int | None = None,
) -> list[McEstimate]:
    """Estimate several event probabilities on one shared set of samples."""
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    events = list(events)

    def stat(X):
        return np.stack([np.asarray(ev(X), dtype=bool) for ev in events], axis=1)

    counts = reduce_trials(dist, N, stat, trials, seed, workers=workers)
    return [McEstimate.from_counts(c, trials, seed) for c in counts]


def estimate_event_prob(dist, N, event: Event, trials: int, seed: int, workers=None) -> McEstimate:
    """Estimate ``P(event)``; ``event`` maps a batch ``(n, N)`` to booleans."""
    return estimate_event_probs(dist, N, [event], trials, seed, workers)[0]
