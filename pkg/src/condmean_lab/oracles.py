"""Exact and quadrature references for the Monte Carlo checks."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import ndtr


def range_cdf_uniform(N: int, ell: float, r: float) -> float:
    """``P(max - min <= r)`` for ``N`` IID Uniform(0, ell) variables.

    Classical order-statistics formula ``N u^(N-1) - (N-1) u^N`` with
    ``u = r / ell`` clamped to ``[0, 1]``.
    """
    if N < 2:
        raise ValueError("range distribution needs N >= 2")
    if r <= 0:
        return 0.0
    u = min(r / ell, 1.0)
    return float(min(1.0, max(0.0, N * u ** (N - 1) - (N - 1) * u**N)))


def small_fiber_prob_exact(N: int, ell: float, r: float) -> float:
    """Exact ``P(|fiber| < r)`` under the uniform law on ``[0, ell]^N``.

    A fiber is shorter than ``r`` iff the sample range exceeds
    ``ell - r / sqrt(N)``.
    """
    if r <= 0:
        return 0.0
    threshold = ell - r / math.sqrt(N)
    if threshold <= 0:
        return 1.0
    u = r / math.sqrt(N) / ell
    if u < 0.05:
        # polynomial form avoids cancellation in 1 - F for short fibers
        return _tail_series(N, u)
    w = 1.0 - u
    return float(1.0 - (N * w ** (N - 1) - (N - 1) * w**N))


def _tail_series(N: int, u: float) -> float:
    # 1 - N(1-u)^(N-1) + (N-1)(1-u)^N as an exact finite polynomial in u
    total = 0.0
    for k in range(2, N + 1):
        coef = (-1) ** k * (math.comb(N - 1, k) * -N + (N - 1) * math.comb(N, k))
        total += coef * u**k
    return total


def small_fiber_bound_stated(N: int, rho_bar: float, r: float) -> float:
    """Short-fiber bound with the quarter constant: ``rho_bar^2 r^2 N / 4``."""
    return 0.25 * rho_bar**2 * r**2 * N


def small_fiber_bound_proof(N: int, rho_bar: float, r: float) -> float:
    """Short-fiber bound as certified by the union-bound argument: ``rho_bar^2 r^2 N``."""
    return rho_bar**2 * r**2 * N


_SIGMA_HALF = math.sqrt(0.5)


def _strip_integrand(y: float, s: float) -> float:
    # xi, eta independent N(0, 1/2); P(xi in [y^2, y^2 + s]) via upper tails
    lo = y * y / _SIGMA_HALF
    hi = (y * y + s) / _SIGMA_HALF
    weight = math.exp(-y * y) / math.sqrt(math.pi)
    return weight * float(ndtr(-lo) - ndtr(-hi))


def gaussian_strip_prob(s: float, quad_tol: float = 1e-10) -> float:
    """``P(xi in [eta^2, eta^2 + s])`` for ``xi = (X1+X2)/2``, ``eta = (X1-X2)/2``, X standard normal.

    ``xi`` and ``eta`` are independent N(0, 1/2), so the planar strip
    reduces to a one-dimensional integral over ``eta`` evaluated by
    adaptive Gauss-Kronrod quadrature.  The integrand is even in ``eta``.
    """
    if s < 0:
        raise ValueError("strip width must be non-negative")
    if s == 0:
        return 0.0
    # |eta| > 8 carries mass < 1e-28
    val, err = integrate.quad(_strip_integrand, 0.0, 8.0, args=(s,), epsabs=quad_tol / 4, epsrel=0.0, limit=200)
    if err > quad_tol / 2:
        raise RuntimeError(f"strip quadrature error estimate {err:.3g} above tolerance")
    return 2.0 * val


def range_cdf_empirical(samples: np.ndarray, r_grid) -> np.ndarray:
    """Empirical CDF of the sample range at each ``r`` (helper for validation)."""
    spread = samples.max(axis=1) - samples.min(axis=1)
    spread.sort()
    return np.searchsorted(spread, np.asarray(r_grid, dtype=float), side="right") / spread.size
