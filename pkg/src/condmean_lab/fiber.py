"""Geometry of the fibers ``{X in [a, a+ell]^N : X_i - X_N = Y_i}``.

Each fiber is a segment parallel to the main diagonal.  Along it the
rescaled mean ``xi_tilde`` is a unit-speed parameter, so lengths and
``xi_tilde``-ranges coincide.  For a point ``X`` on the fiber the segment
extends by ``sqrt(N) * (min(X) - a)`` downwards and
``sqrt(N) * (a + ell - max(X))`` upwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyFiberError, OutOfSupportError
from .sample import SampleVector, Uniform


@dataclass(frozen=True)
class FiberSegment:
    """Intersection of one fiber with the cube ``[a, a+ell]^N``.

    ``x_min`` / ``x_max`` refer to the point the segment was built from;
    only their difference is constant along the fiber.
    """

    Y: np.ndarray
    a: float
    ell: float
    length: float
    xi_tilde_range: tuple[float, float]
    x_min: float
    x_max: float
    empty: bool = False

    @property
    def N(self) -> int:
        return self.Y.size + 1


def sample_extremes(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("sample_extremes needs at least one value")
    return float(values.min()), float(values.max())


def fiber_lengths(X: np.ndarray, a: float, ell: float) -> np.ndarray:
    """Fiber length through each row of ``X``: ``sqrt(N) * (ell - (max - min))``."""
    X = np.asarray(X, dtype=float)
    N = X.shape[-1]
    spread = X.max(axis=-1) - X.min(axis=-1)
    return math.sqrt(N) * np.maximum(ell - spread, 0.0)


def fiber_through(x: SampleVector) -> FiberSegment:
    """The fiber segment containing the sample ``x``."""
    dist = x.dist
    if not hasattr(dist, "ell"):
        raise TypeError("fiber geometry needs a law with compact support [a, a+ell]")
    a, ell = float(dist.a), float(dist.ell)
    values = x.values
    x_min, x_max = sample_extremes(values)
    if x_min < a or x_max > a + ell:
        raise OutOfSupportError("sample leaves the support cube")
    N = values.size
    root = math.sqrt(N)
    xi_tilde = values.sum() / root
    lo = xi_tilde - root * (x_min - a)
    hi = xi_tilde + root * (a + ell - x_max)
    length = root * (ell - (x_max - x_min))
    Y = values[:-1] - values[-1]
    return FiberSegment(Y, a, ell, float(length), (float(lo), float(hi)), x_min, x_max)


def fiber_from_offsets(Y, a: float = 0.0, ell: float = 1.0) -> FiberSegment:
    """Fiber segment labelled by ``Y``, anchored at its midpoint.

    Returns a segment flagged ``empty`` when ``max(Y, 0) - min(Y, 0) > ell``.
    """
    Y = np.asarray(Y, dtype=float)
    offsets = np.append(Y, 0.0)
    N = offsets.size
    spread = float(offsets.max() - offsets.min())
    if spread > ell:
        return FiberSegment(Y, a, ell, 0.0, (math.nan, math.nan), math.nan, math.nan, empty=True)
    # shift so the segment midpoint is the anchor point
    shift = a + 0.5 * (ell - spread) - offsets.min()
    point = offsets + shift
    return fiber_through(SampleVector(np.clip(point, a, a + ell), Uniform(a, ell)))


def fiber_length_brute_force(Y, a: float, ell: float) -> float:
    """Length of the fiber ``Y`` by clipping its parametric line against the cube.

    The line ``X(t) = X0 + t (1, ..., 1) / sqrt(N)`` with ``X0 = (Y, 0)`` is
    intersected coordinate by coordinate with ``[a, a + ell]``; the result
    is the length of the surviving parameter interval.  Independent check
    of the closed-form length.
    """
    x0 = [float(y) for y in Y] + [0.0]
    root = math.sqrt(len(x0))
    t_lo, t_hi = -math.inf, math.inf
    for c in x0:
        t_lo = max(t_lo, root * (a - c))
        t_hi = min(t_hi, root * (a + ell - c))
    return max(0.0, t_hi - t_lo)


def conditional_interval_prob_uniform(f: FiberSegment, t: float, s: float) -> float:
    """``P(xi in [t, t+s] | fiber)`` under the uniform law on the fiber.

    A zero-length fiber carries a point mass: the result is 1 when its
    ``xi`` value lies in ``[t, t+s]`` and 0 otherwise.
    """
    if s < 0:
        raise ValueError(f"interval length must be non-negative, got {s}")
    if f.empty:
        raise EmptyFiberError("conditional law undefined on an empty fiber")
    root = math.sqrt(f.N)
    lo, hi = f.xi_tilde_range
    if f.length <= 0.0:
        xi_point = lo / root
        return 1.0 if t <= xi_point <= t + s else 0.0
    overlap = min(hi, root * (t + s)) - max(lo, root * t)
    return min(1.0, max(0.0, overlap) / f.length)
