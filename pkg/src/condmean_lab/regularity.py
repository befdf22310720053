"""Conditional continuity modulus, interval-hit probabilities and closed-form bounds.

An interval endpoint ``lam`` that depends on the sample only through its
fluctuations is represented by a :class:`LambdaFunction` acting on the
fiber coordinates ``Y``.  The hit event is ``xi in [lam(Y), lam(Y) + s]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import ndtr

from .errors import PreconditionError
from .fiber import FiberSegment
from .mc import McEstimate, estimate_event_probs
from .sample import Distribution, eta_from_fiber_coordinates, fiber_coordinates


@dataclass(frozen=True)
class LambdaFunction:
    """Vectorized map from fiber coordinates ``(n, N-1)`` to endpoints ``(n,)``."""

    func: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    kind: str = "user"
    label: str = ""

    def __call__(self, Y) -> np.ndarray:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        return np.asarray(self.func(Y), dtype=float).reshape(Y.shape[0])

    @classmethod
    def constant(cls, t: float) -> "LambdaFunction":
        return cls(lambda Y: np.full(Y.shape[0], float(t)), "constant", f"const({t:g})")

    @classmethod
    def quadratic_eta(cls) -> "LambdaFunction":
        """``eta_1^2``; for N = 2 this is ``((X1 - X2) / 2)^2``."""
        return cls(lambda Y: eta_from_fiber_coordinates(Y)[:, 0] ** 2, "quadratic", "eta1^2")

    @classmethod
    def clamped_mean_square(cls, a: float, ell: float) -> "LambdaFunction":
        """``clamp(mean(Y)^2, a, a + ell)``."""
        return cls(lambda Y: np.clip(Y.mean(axis=1) ** 2, a, a + ell), "user", "clamp(mean(Y)^2)")

    @classmethod
    def fiber_midpoint(cls, a: float, ell: float, s: float = 0.0) -> "LambdaFunction":
        """Sample-mean value at the midpoint of the fiber, shifted down by ``s/2``.

        Centers the hit interval on the fiber, which is the worst case for
        the uniform law.
        """

        def func(Y):
            offsets = np.concatenate([Y, np.zeros((Y.shape[0], 1))], axis=1)
            lo, hi = offsets.min(axis=1), offsets.max(axis=1)
            x_last_mid = a + 0.5 * (ell - lo - hi)
            return x_last_mid + offsets.mean(axis=1) - 0.5 * s

        return cls(func, "user", f"fiber-midpoint(s={s:g})")

    @classmethod
    def user(cls, func, label: str = "user") -> "LambdaFunction":
        return cls(func, "user", label)


def check_purity(lam: LambdaFunction, Y) -> bool:
    """Spot-check that equal inputs give equal outputs."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    return bool(np.array_equal(lam(Y), lam(Y.copy())))


def hit_event(lam: LambdaFunction, s: float):
    """Event ``xi in [lam(Y), lam(Y) + s]`` on batches of samples."""

    def event(X):
        xi = X.mean(axis=1)
        lo = lam(fiber_coordinates(X))
        return (xi >= lo) & (xi <= lo + s)

    return event


def interval_hit_probs(
    dist: Distribution,
    N: int,
    cases: Sequence[tuple[LambdaFunction, float]],
    trials: int,
    seed: int,
    workers: int | None = None,
) -> list[McEstimate]:
    """Estimate several ``(lam, s)`` hit probabilities on shared samples."""
    for _, s in cases:
        if s < 0:
            raise ValueError(f"interval length must be non-negative, got {s}")
    return estimate_event_probs(dist, N, [hit_event(lam, s) for lam, s in cases], trials, seed, workers)


def interval_hit_prob(dist, N, lam: LambdaFunction, s: float, trials: int, seed: int, workers=None) -> McEstimate:
    """Monte Carlo estimate of ``P(xi in [lam(Y), lam(Y) + s])``."""
    return interval_hit_probs(dist, N, [(lam, s)], trials, seed, workers)[0]


def continuity_modulus_uniform(f: FiberSegment, s: float) -> float:
    """``min(1, sqrt(N) s / |fiber|)``; a degenerate fiber gives 1."""
    if s < 0:
        raise ValueError("s must be non-negative")
    if f.length <= 0.0:
        return 1.0
    return min(1.0, math.sqrt(f.N) * s / f.length)


def theorem_bound_uniform(N: int, ell: float, s: float) -> float:
    """``3 N^3 s / ell``, valid for ``0 < s <= 1``. Not clamped."""
    if not 0 < s <= 1:
        raise PreconditionError(f"uniform regularity bound holds for s in (0, 1], got s={s}")
    return 3.0 * N**3 * s / ell


def gaussian_interval_bound(N: int, interval_len: float) -> float:
    """Density-maximum bound ``sqrt(N) |I| / sqrt(2 pi)`` for the Gaussian sample mean."""
    if interval_len < 0:
        raise ValueError("interval length must be non-negative")
    return math.sqrt(N) * interval_len / math.sqrt(2 * math.pi)


def gaussian_interval_prob(N: int, t: float, s: float) -> float:
    """Exact ``P(xi in [t, t+s])`` for the mean of N standard normals."""
    root = math.sqrt(N)
    return float(ndtr(root * (t + s)) - ndtr(root * t))


def smooth_theorem_bound(C: float, N: int, s: float, ell: float) -> float:
    """``C N s`` on the window ``0 < s < ell / N^2``."""
    if not 0 < s < ell / N**2:
        raise PreconditionError(f"smooth-density bound needs 0 < s < ell/N^2 = {ell / N**2:g}, got s={s}")
    return C * N * s


@dataclass(frozen=True)
class SmoothCalibration:
    """Smallest constants ``C_N`` with ``p_hat <= C_N N s`` over a test grid."""

    per_N: dict
    global_C: float
    spread: float
    rows: list

    @property
    def stable(self) -> bool:
        return math.isfinite(self.global_C) and self.spread < 2.0


def calibrate_smooth_constant(
    dist: Distribution,
    Ns: Sequence[int],
    s_fractions: Sequence[float],
    lambdas: Callable[[int, float], Sequence[LambdaFunction]],
    trials: int,
    seed: int,
    workers: int | None = None,
) -> SmoothCalibration:
    """Fit ``C`` in ``P(xi in I_s) <= C N s`` over ``N`` and ``s = frac * ell / N^2``.

    ``lambdas(N, s)`` returns the endpoint maps to test.  ``spread`` is the
    ratio of the largest to the smallest per-``N`` constant.
    """
    a, ell = dist.support[0], dist.support[1] - dist.support[0]
    per_N, rows = {}, []
    for N in Ns:
        cases = []
        for frac in s_fractions:
            s = frac * ell / N**2
            smooth_theorem_bound(1.0, N, s, ell)
            cases += [(lam, s) for lam in lambdas(N, s)]
        estimates = interval_hit_probs(dist, N, cases, trials, seed, workers)
        best = 0.0
        for (lam, s), est in zip(cases, estimates):
            c_hat = est.p_hat / (N * s)
            best = max(best, c_hat)
            rows.append({"N": N, "s": s, "lambda": lam.label, "estimate": est, "C_hat": c_hat})
        per_N[N] = best
    values = list(per_N.values())
    spread = max(values) / min(values) if min(values) > 0 else math.inf
    return SmoothCalibration(per_N, max(values), spread, rows)
