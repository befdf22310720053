"""Random discrete Schroedinger operators on finite graphs.

``H = adjacency + diag(V)`` with an IID potential ``V``.  Writing
``V = xi * 1 + eta`` splits ``H = xi * I + A`` where ``A`` carries the
zero-mean potential ``eta``; the spectra satisfy
``eig(H) = xi + eig(A)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .errors import ConvergenceError
from .mc import McEstimate, reduce_trials, sample_iid
from .regularity import LambdaFunction, theorem_bound_uniform
from .sample import Distribution, Uniform, eta_from_fiber_coordinates


@dataclass(frozen=True)
class FiniteGraph:
    n: int
    edges: tuple[tuple[int, int], ...]
    name: str = "graph"

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("graph needs at least 2 vertices")
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range")
            seen.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.n, self.n))
        for i, j in self.edges:
            adj[i, j] = adj[j, i] = 1.0
        return adj


def path_graph(n: int) -> FiniteGraph:
    return FiniteGraph(n, tuple((i, i + 1) for i in range(n - 1)), f"path:{n}")


def cycle_graph(n: int) -> FiniteGraph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 vertices")
    return FiniteGraph(n, tuple((i, (i + 1) % n) for i in range(n)), f"cycle:{n}")


def grid_graph(rows: int, cols: int) -> FiniteGraph:
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return FiniteGraph(rows * cols, tuple(edges), f"grid:{rows}x{cols}")


def parse_graph(spec: str) -> FiniteGraph:
    """Parse ``path:N``, ``cycle:N`` or ``grid:RxC``."""
    kind, _, arg = spec.partition(":")
    if kind == "path":
        return path_graph(int(arg))
    if kind == "cycle":
        return cycle_graph(int(arg))
    if kind == "grid":
        rows, _, cols = arg.partition("x")
        return grid_graph(int(rows), int(cols))
    raise ValueError(f"unknown graph spec {spec!r}")


def jacobi_eigh(mats, tol: float = 1e-13, max_sweeps: int = 100, vectors: bool = False):
    """Cyclic Jacobi diagonalization of a stack of symmetric matrices.

    Accepts shape ``(n, n)`` or ``(batch, n, n)``.  Sweeps until the
    off-diagonal Frobenius norm of every matrix is below
    ``tol * ||mat||_F``.  Returns eigenvalues sorted ascending and, with
    ``vectors=True``, the matching orthonormal eigenvectors as columns.
    """
    A = np.array(mats, dtype=float, copy=True)
    single = A.ndim == 2
    if single:
        A = A[None]
    if A.ndim != 3 or A.shape[1] != A.shape[2]:
        raise ValueError(f"expected square matrices, got shape {A.shape}")
    batch, n, _ = A.shape
    scale = np.sqrt(np.sum(A * A, axis=(1, 2)))
    asym = np.max(np.abs(A - A.transpose(0, 2, 1)), axis=(1, 2))
    if np.any(asym > 1e-12 * np.maximum(scale, 1.0)):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.transpose(0, 2, 1))
    V = np.broadcast_to(np.eye(n), A.shape).copy() if vectors else None
    off_mask = ~np.eye(n, dtype=bool)
    threshold = tol * scale

    def converged():
        off = np.sqrt(np.sum(np.where(off_mask, A * A, 0.0), axis=(1, 2)))
        return off <= threshold

    for _ in range(max_sweeps):
        if np.all(converged()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                nonzero = apq != 0.0
                if not np.any(nonzero):
                    continue
                theta = np.where(nonzero, (A[:, q, q] - A[:, p, p]) / (2.0 * np.where(nonzero, apq, 1.0)), 0.0)
                t = np.where(nonzero, np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0)), 0.0)
                t = np.where(nonzero & (theta == 0.0), 1.0, t)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cc, ss = c[:, None], s[:, None]
                Ap, Aq = A[:, :, p].copy(), A[:, :, q].copy()
                A[:, :, p] = cc * Ap - ss * Aq
                A[:, :, q] = ss * Ap + cc * Aq
                Ap, Aq = A[:, p, :].copy(), A[:, q, :].copy()
                A[:, p, :] = cc * Ap - ss * Aq
                A[:, q, :] = ss * Ap + cc * Aq
                A[:, p, q] = 0.0
                A[:, q, p] = 0.0
                if vectors:
                    Vp, Vq = V[:, :, p].copy(), V[:, :, q].copy()
                    V[:, :, p] = cc * Vp - ss * Vq
                    V[:, :, q] = ss * Vp + cc * Vq
    else:
        if not np.all(converged()):
            raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")

    w = np.diagonal(A, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    if vectors:
        V = np.take_along_axis(V, order[:, None, :], axis=2)
        return (w[0], V[0]) if single else (w, V)
    return w[0] if single else w


def sym_eigenvalues(mat, tol: float = 1e-13) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix (or stack of them)."""
    return jacobi_eigh(mat, tol=tol)


@dataclass(frozen=True)
class DsoInstance:
    graph: FiniteGraph
    V: np.ndarray
    H: np.ndarray
    xi: float
    A: np.ndarray


def dso_from_potential(graph: FiniteGraph, V) -> DsoInstance:
    V = np.asarray(V, dtype=float)
    if V.shape != (graph.n,):
        raise ValueError(f"potential must have {graph.n} entries")
    adj = graph.adjacency()
    xi = float(V.mean())
    return DsoInstance(graph, V, adj + np.diag(V), xi, adj + np.diag(V - xi))


def build_dso(graph: FiniteGraph, dist: Distribution, trial_index: int, seed: int) -> DsoInstance:
    """DSO with the IID potential of Monte Carlo trial ``trial_index``."""
    return dso_from_potential(graph, sample_iid(dist, graph.n, trial_index, seed).values)


def shift_identity_check(inst: DsoInstance, tol: float | None = None) -> tuple[bool, float]:
    """Compare sorted ``eig(H)`` with ``xi + sorted eig(A)``.

    Default tolerance is ``1e-10 * (||H||_F + 1)``.  Returns ``(ok, max deviation)``.
    """
    if tol is None:
        tol = 1e-10 * (np.linalg.norm(inst.H) + 1.0)
    dev = float(np.max(np.abs(sym_eigenvalues(inst.H) - (inst.xi + sym_eigenvalues(inst.A)))))
    return dev <= tol, dev


def shift_identity_deviations(graph: FiniteGraph, potentials: np.ndarray) -> np.ndarray:
    """Batched shift-identity deviations relative to ``||H||_F + 1``."""
    potentials = np.asarray(potentials, dtype=float)
    adj = graph.adjacency()
    xi = potentials.mean(axis=1)
    H = adj + potentials[:, :, None] * np.eye(graph.n)
    A = adj + (potentials - xi[:, None])[:, :, None] * np.eye(graph.n)
    dev = np.max(np.abs(jacobi_eigh(H) - (xi[:, None] + jacobi_eigh(A))), axis=1)
    return dev / (np.sqrt(np.sum(H * H, axis=(1, 2))) + 1.0)


@dataclass(frozen=True)
class EvcResult:
    p_trace: McEstimate
    p_sum_bound: float
    sum_std_err: float
    per_level: tuple[McEstimate, ...]
    union_bound: float | None

    @property
    def combined_std_err(self) -> float:
        return math.hypot(self.p_trace.std_err, self.sum_std_err)


def evc_estimate(
    graph: FiniteGraph,
    dist: Distribution,
    t: float,
    s: float,
    trials: int,
    seed: int,
    workers: int | None = None,
) -> EvcResult:
    """Monte Carlo eigenvalue-concentration estimate on ``[t, t + s]``.

    ``p_trace`` estimates ``P(some eigenvalue of H in I)``; ``p_sum_bound``
    is the union bound ``sum_j P(lambda_j in I)`` on the same trials.  For a
    uniform potential ``union_bound = N * min(1, 3 N^3 s / ell)``.
    """
    if not s > 0:
        raise ValueError("interval length must be positive")
    n = graph.n
    adj = graph.adjacency()
    eye = np.eye(n)

    def stat(X):
        lam = jacobi_eigh(adj + X[:, :, None] * eye)
        inside = (lam >= t) & (lam <= t + s)
        count = inside.sum(axis=1)
        return np.column_stack([inside.any(axis=1), count, count * count, inside])

    totals = reduce_trials(dist, n, stat, trials, seed, workers=workers)
    p_trace = McEstimate.from_counts(totals[0], trials, seed)
    mean_count = totals[1] / trials
    var_count = max(totals[2] / trials - mean_count**2, 0.0)
    per_level = tuple(McEstimate.from_counts(c, trials, seed) for c in totals[3:])
    union = None
    if isinstance(dist, Uniform) and s <= 1:
        union = n * min(1.0, theorem_bound_uniform(n, dist.ell, s))
    return EvcResult(p_trace, float(mean_count), math.sqrt(var_count / trials), per_level, union)


def eigenvalue_lambda(graph: FiniteGraph, j: int, t: float) -> LambdaFunction:
    """Endpoint map ``Y -> t - mu_j(eta(Y))`` with ``mu_j`` the j-th smallest eigenvalue of ``A``.

    ``xi in [lam(Y), lam(Y) + s]`` is then the event ``lambda_j(H) in [t, t + s]``.
    """
    if not 1 <= j <= graph.n:
        raise IndexError(f"eigenvalue index {j} outside 1..{graph.n}")
    adj = graph.adjacency()
    eye = np.eye(graph.n)

    def func(Y):
        eta = eta_from_fiber_coordinates(Y)
        mu = jacobi_eigh(adj + eta[:, :, None] * eye)
        return t - mu[:, j - 1]

    return LambdaFunction(func, "eigenvalue", f"eig{j}({graph.name}),t={t:g}")


def char_poly_eigenvalues(mat) -> np.ndarray:
    """Eigenvalues of a symmetric 2x2 or 3x3 matrix as closed-form roots of its characteristic polynomial."""
    m = np.asarray(mat, dtype=float)
    if m.shape == (2, 2):
        half_tr = 0.5 * (m[0, 0] + m[1, 1])
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        disc = math.sqrt(max(half_tr * half_tr - det, 0.0))
        return np.array([half_tr - disc, half_tr + disc])
    if m.shape == (3, 3):
        # lambda^3 - c2 lambda^2 + c1 lambda - c0, solved by the trigonometric method
        c2 = m[0, 0] + m[1, 1] + m[2, 2]
        c1 = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
              + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
        c0 = (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
              - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
              + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))
        shift = c2 / 3.0
        p = c1 - c2 * c2 / 3.0
        q = -(2 * c2**3 / 27.0 - c2 * c1 / 3.0 + c0)
        if p > -1e-300:
            # p == 0 only for a scalar matrix
            return np.full(3, shift)
        r = 2.0 * math.sqrt(-p / 3.0)
        arg = max(-1.0, min(1.0, 3.0 * q / (p * r)))
        phi = math.acos(arg) / 3.0
        roots = [shift + r * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
        return np.sort(roots)
    raise ValueError("closed-form characteristic roots only for 2x2 and 3x3 matrices")
