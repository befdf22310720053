"""Samples, the mean/fluctuation decomposition and the Helmert rotation.

A sample ``X = (X_1, ..., X_N)`` is split into its mean ``xi``, the
rescaled mean ``xi_tilde = sqrt(N) * xi``, fluctuations ``eta = X - xi``
and fiber coordinates ``Y_i = X_i - X_N`` (``i < N``).  Batched helpers
work on arrays of shape ``(n, N)``; the scalar API wraps them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import integrate

from .errors import DegenerateSampleError, OutOfSupportError

_PROBE_POINTS = 2001
_NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class Uniform:
    """Uniform law on ``[a, a + ell]``."""

    a: float = 0.0
    ell: float = 1.0

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError(f"width ell must be positive, got {self.ell}")

    @property
    def support(self) -> tuple[float, float]:
        return (self.a, self.a + self.ell)

    @property
    def rho_bar(self) -> float:
        return 1.0 / self.ell

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        inside = (v >= self.a) & (v <= self.a + self.ell)
        return np.where(inside, 1.0 / self.ell, 0.0)

    def mean(self) -> float:
        return self.a + 0.5 * self.ell


@dataclass(frozen=True)
class StandardGaussian:
    """Standard normal law N(0, 1)."""

    @property
    def support(self) -> tuple[float, float]:
        return (-math.inf, math.inf)

    @property
    def rho_bar(self) -> float:
        return 1.0 / math.sqrt(2.0 * math.pi)

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        return np.exp(-0.5 * v * v) / math.sqrt(2.0 * math.pi)

    def mean(self) -> float:
        return 0.0


@dataclass(frozen=True)
class SmoothDensity:
    """Absolutely continuous law with density supported on ``[a, a + ell]``.

    ``density`` must accept numpy arrays.  On construction the density is
    checked for strict positivity on the open support, normalization (by
    adaptive quadrature) and the declared bound ``log_deriv_bound`` on
    ``|(ln rho)'|`` (central differences on an interior probe grid).  The
    probe-grid maximum of the density is stored as ``rho_bar``.
    """

    a: float
    ell: float
    density: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    log_deriv_bound: float
    name: str = "smooth"
    rho_bar: float = field(init=False, compare=False)

    def __post_init__(self):
        if not self.ell > 0:
            raise ValueError(f"width ell must be positive, got {self.ell}")
        if self.log_deriv_bound < 0:
            raise ValueError("log_deriv_bound must be non-negative")
        grid = np.linspace(self.a, self.a + self.ell, _PROBE_POINTS)
        values = self.pdf(grid)
        interior = values[1:-1]
        if not np.all(np.isfinite(values)) or np.any(interior <= 0):
            raise ValueError(f"density {self.name!r} must be positive and finite on the open support")
        total, _ = integrate.quad(self.pdf, self.a, self.a + self.ell, epsabs=1e-12, epsrel=1e-12, limit=200)
        if abs(total - 1.0) > _NORMALIZATION_TOL:
            raise ValueError(f"density {self.name!r} integrates to {total!r}, not 1")

        h = self.ell * 1e-6
        probe = grid[1:-1]
        probe = probe[(probe - h > self.a) & (probe + h < self.a + self.ell)]
        slope = (np.log(self.pdf(probe + h)) - np.log(self.pdf(probe - h))) / (2 * h)
        worst = float(np.max(np.abs(slope)))
        if worst > self.log_deriv_bound * (1 + 1e-6) + 1e-5:
            raise ValueError(
                f"density {self.name!r}: |(ln rho)'| reaches {worst:.6g} > declared {self.log_deriv_bound}"
            )
        object.__setattr__(self, "rho_bar", float(np.max(values)))

    @property
    def support(self) -> tuple[float, float]:
        return (self.a, self.a + self.ell)

    def pdf(self, v):
        v = np.asarray(v, dtype=float)
        out = np.asarray(self.density(v), dtype=float)
        if out.shape != v.shape:
            out = np.broadcast_to(out, v.shape).astype(float)
        return out

    def mass(self, lo: float, hi: float) -> float:
        val, _ = integrate.quad(self.pdf, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def mean(self) -> float:
        val, _ = integrate.quad(lambda v: v * self.pdf(v), self.a, self.a + self.ell, epsabs=1e-13, limit=200)
        return val


Distribution = Union[Uniform, StandardGaussian, SmoothDensity]


def exponential_density(rate: float = 1.0, a: float = 0.0, ell: float = 1.0) -> SmoothDensity:
    """``rho(v)`` proportional to ``exp(rate * (v - a))`` on ``[a, a + ell]``.

    With the defaults this is ``e^v / (e - 1)`` on ``[0, 1]``.
    """
    if rate == 0:
        norm = 1.0 / ell
        return SmoothDensity(a, ell, lambda v: np.full_like(np.asarray(v, float), norm), 0.0, name="flat")
    z = math.expm1(rate * ell) / rate

    def rho(v):
        return np.exp(rate * (np.asarray(v, float) - a)) / z

    return SmoothDensity(a, ell, rho, abs(rate), name=f"exp(rate={rate:g})")


def truncated_gaussian_density(mu: float = 0.5, sigma: float = 0.3, a: float = 0.0, ell: float = 1.0) -> SmoothDensity:
    """Normal(mu, sigma^2) conditioned on ``[a, a + ell]``."""
    from scipy.special import ndtr

    z = sigma * math.sqrt(2 * math.pi) * float(ndtr((a + ell - mu) / sigma) - ndtr((a - mu) / sigma))

    def rho(v):
        v = np.asarray(v, float)
        return np.exp(-0.5 * ((v - mu) / sigma) ** 2) / z

    bound = max(abs(a - mu), abs(a + ell - mu)) / sigma**2
    return SmoothDensity(a, ell, rho, bound, name=f"truncnorm(mu={mu:g},sigma={sigma:g})")


def _check_support(values: np.ndarray, dist: Distribution) -> None:
    lo, hi = dist.support
    if np.any(values < lo) or np.any(values > hi):
        raise OutOfSupportError(f"sample leaves the support [{lo}, {hi}]")


@dataclass(frozen=True)
class SampleVector:
    """One IID draw ``X = (X_1, ..., X_N)`` together with its law."""

    values: np.ndarray
    dist: Distribution

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        if values.ndim != 1 or values.size < 2:
            raise DegenerateSampleError(f"a sample needs N >= 2 coordinates, got shape {values.shape}")
        _check_support(values, self.dist)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class MeanFluctDecomp:
    xi: float
    xi_tilde: float
    eta: np.ndarray
    Y: np.ndarray

    @property
    def N(self) -> int:
        return self.eta.size


def _as_values(x) -> np.ndarray:
    if isinstance(x, SampleVector):
        return x.values
    values = np.asarray(x, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise DegenerateSampleError(f"a sample needs N >= 2 coordinates, got shape {values.shape}")
    return values


def fiber_coordinates(X: np.ndarray) -> np.ndarray:
    """``Y_i = X_i - X_N`` for a batch ``X`` of shape ``(n, N)``."""
    X = np.asarray(X, dtype=float)
    return X[..., :-1] - X[..., -1:]


def decompose_batch(X: np.ndarray):
    """Vectorized decomposition of samples stored row-wise.

    Returns ``(xi, xi_tilde, eta, Y)`` with shapes ``(n,), (n,), (n, N), (n, N-1)``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DegenerateSampleError(f"expected shape (n, N) with N >= 2, got {X.shape}")
    N = X.shape[1]
    xi = X.mean(axis=1)
    eta = X - xi[:, None]
    return xi, math.sqrt(N) * xi, eta, fiber_coordinates(X)


def decompose(x) -> MeanFluctDecomp:
    """Split a sample into mean, rescaled mean, fluctuations and fiber coordinates."""
    values = _as_values(x)
    xi, xi_tilde, eta, Y = decompose_batch(values[None, :])
    return MeanFluctDecomp(float(xi[0]), float(xi_tilde[0]), eta[0], Y[0])


def reconstruct(d: MeanFluctDecomp) -> np.ndarray:
    """Inverse of :func:`decompose`: ``X_i = eta_i + xi_tilde / sqrt(N)``."""
    eta = np.asarray(d.eta, dtype=float)
    return eta + d.xi_tilde / math.sqrt(eta.size)


def eta_from_fiber_coordinates(Y: np.ndarray) -> np.ndarray:
    """Recover the (zero-mean) fluctuations from fiber coordinates, batched.

    ``eta_N = -sum(Y) / N`` and ``eta_i = Y_i + eta_N``.
    """
    Y = np.asarray(Y, dtype=float)
    N = Y.shape[-1] + 1
    eta_last = -Y.sum(axis=-1, keepdims=True) / N
    return np.concatenate([Y + eta_last, eta_last], axis=-1)


def helmert_matrix(N: int) -> np.ndarray:
    """Orthogonal N x N Helmert matrix; row 0 is ``(1, ..., 1) / sqrt(N)``.

    Row ``j >= 1`` holds ``j`` copies of ``1/sqrt(j(j+1))``, then
    ``-j/sqrt(j(j+1))``, then zeros.
    """
    if N < 2:
        raise DegenerateSampleError("Helmert transform needs N >= 2")
    H = np.zeros((N, N))
    H[0, :] = 1.0 / math.sqrt(N)
    for j in range(1, N):
        c = 1.0 / math.sqrt(j * (j + 1))
        H[j, :j] = c
        H[j, j] = -j * c
    return H


def helmert_transform(x) -> np.ndarray:
    """Coordinates ``(xi_tilde, eta_tilde_1, ..., eta_tilde_{N-1})`` of a sample."""
    values = _as_values(x)
    return helmert_matrix(values.size) @ values


def inverse_helmert_transform(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return helmert_matrix(z.size).T @ z
