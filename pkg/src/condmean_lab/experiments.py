"""Named verification suites.

Each suite takes a parameter dict (already merged with its defaults) and
returns an :class:`ExperimentResult` holding flat result rows.  Every row
carries ``experiment``, ``case``, ``seed``, the estimate with its 95%
interval where one exists, the applicable bound and ``pass``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import oracles
from .anderson import evc_estimate, parse_graph, shift_identity_deviations, sym_eigenvalues
from .errors import PreconditionError
from .fiber import fiber_length_brute_force, fiber_through
from .mc import (
    McEstimate,
    block_generator,
    count_events,
    estimate_event_prob,
    estimate_event_probs,
    sample_iid,
    sample_range,
)
from .partition import build_partition, random_halfspace_events, sandwich_check
from .regularity import (
    LambdaFunction,
    SmoothCalibration,
    calibrate_smooth_constant,
    gaussian_interval_bound,
    gaussian_interval_prob,
    interval_hit_prob,
    interval_hit_probs,
    theorem_bound_uniform,
)
from .sample import (
    SampleVector,
    StandardGaussian,
    Uniform,
    exponential_density,
    truncated_gaussian_density,
)


@dataclass
class ExperimentResult:
    name: str
    rows: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(bool(r.get("pass", True)) for r in self.rows)


def as_list(value) -> list:
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def make_dist(name: str, a: float = 0.0, ell: float = 1.0):
    if name == "uniform":
        return Uniform(a, ell)
    if name == "gaussian":
        return StandardGaussian()
    if name == "exp":
        return exponential_density(1.0, a, ell)
    if name == "truncgauss":
        return truncated_gaussian_density(a + 0.5 * ell, 0.3 * ell, a, ell)
    raise ValueError(f"unknown distribution {name!r}")


def _estimate_cols(est: McEstimate) -> dict:
    return {"estimate": est.p_hat, "std_err": est.std_err, "ci_lo": est.ci95[0], "ci_hi": est.ci95[1],
            "trials": est.trials}


def _binomial_sigma(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


# -- fiber-oracle ------------------------------------------------------------

def run_fiber_oracle(params: dict) -> ExperimentResult:
    res = ExperimentResult("fiber-oracle")
    a, ell, seed = params["a"], params["ell"], params["seed"]
    Ns = as_list(params["N"])
    total = params["trials"]
    dist = Uniform(a, ell)
    for i, N in enumerate(Ns):
        count = total // len(Ns) + (1 if i < total % len(Ns) else 0)
        X = sample_range(dist, N, 0, count, seed)
        worst = 0.0
        for row in X:
            seg = fiber_through(SampleVector(row, dist))
            worst = max(worst, abs(seg.length - fiber_length_brute_force(seg.Y, a, ell)))
        res.rows.append({"experiment": res.name, "case": f"N={N}", "seed": seed, "N": N, "samples": count,
                         "max_abs_diff": worst, "bound": 1e-12, "pass": worst <= 1e-12})
    return res


# -- verify-lemma --------------------------------------------------------------

LEMMA_MC_MAX_N = 8
LEMMA_MC_FRACTIONS = (0.01, 0.02, 0.05, 0.1, 0.2)


def run_verify_lemma(params: dict) -> ExperimentResult:
    res = ExperimentResult("verify-lemma")
    ell, seed, trials = params["ell"], params["seed"], params["trials"]
    rho_bar = 1.0 / ell
    for N in as_list(params["N"]):
        root = math.sqrt(N)
        grid = as_list(params.get("r")) or list(np.linspace(ell * root / 20, ell * root, 20))
        for r in map(float, grid):
            exact = oracles.small_fiber_prob_exact(N, ell, r)
            stated = oracles.small_fiber_bound_stated(N, rho_bar, r)
            proof = oracles.small_fiber_bound_proof(N, rho_bar, r)
            res.rows.append({"experiment": res.name, "case": "bound", "seed": seed, "N": N, "r": float(r),
                             "exact": exact, "bound_stated": stated, "bound_proof": proof,
                             "stated_holds": exact <= stated, "bound": proof, "pass_proof": exact <= proof,
                             "pass": exact <= proof})
        if N > LEMMA_MC_MAX_N:
            continue
        mc_r = as_list(params.get("r")) or [f * ell * root for f in LEMMA_MC_FRACTIONS]
        lengths_below = [
            (lambda X, r=r: root * (ell - (X.max(axis=1) - X.min(axis=1))) < r) for r in mc_r
        ]
        ests = estimate_event_probs(Uniform(0.0, ell), N, lengths_below, trials, seed)
        for r, est in zip(mc_r, ests):
            exact = oracles.small_fiber_prob_exact(N, ell, r)
            stated = oracles.small_fiber_bound_stated(N, rho_bar, r)
            proof = oracles.small_fiber_bound_proof(N, rho_bar, r)
            within = abs(est.p_hat - exact) <= 3 * _binomial_sigma(exact, trials)
            res.rows.append({"experiment": res.name, "case": "mc", "seed": seed, "N": N, "r": float(r),
                             "exact": exact, **_estimate_cols(est), "empirical": est.p_hat,
                             "bound_stated": stated, "bound_proof": proof, "stated_holds": exact <= stated,
                             "bound": proof, "pass_proof": exact <= proof, "mc_within_3sigma": within,
                             "pass": within and exact <= proof})
    return res


# -- verify-theorem-uniform ---------------------------------------------------

def uniform_theorem_lambdas(a: float, ell: float, s: float) -> list[LambdaFunction]:
    return [LambdaFunction.constant(a + f * ell) for f in (0.25, 0.5, 0.75)] + [
        LambdaFunction.clamped_mean_square(a, ell),
        LambdaFunction.fiber_midpoint(a, ell, s),
    ]


def run_verify_theorem_uniform(params: dict) -> ExperimentResult:
    res = ExperimentResult("verify-theorem-uniform")
    a, seed, trials = params["a"], params["seed"], params["trials"]
    s_values = as_list(params["s"])
    for s in s_values:
        if not 0 < s <= 1:
            raise PreconditionError(f"verify-theorem-uniform needs s in (0, 1], got {s}")
    for N in as_list(params["N"]):
        for ell in as_list(params["ell"]):
            cases = [(lam, s) for s in s_values for lam in uniform_theorem_lambdas(a, ell, s)]
            ests = interval_hit_probs(Uniform(a, ell), N, cases, trials, seed)
            for (lam, s), est in zip(cases, ests):
                bound = min(1.0, theorem_bound_uniform(N, ell, s))
                res.rows.append({"experiment": res.name, "case": lam.label, "seed": seed, "N": N, "ell": ell,
                                 "s": s, **_estimate_cols(est), "bound": bound,
                                 "pass": est.p_hat <= bound + 3 * est.std_err})
    return res


# -- gaussian-baseline ---------------------------------------------------------

def run_gaussian_baseline(params: dict) -> ExperimentResult:
    res = ExperimentResult("gaussian-baseline")
    seed, trials = params["seed"], params["trials"]
    for N in as_list(params["N"]):
        for s in as_list(params["s"]):
            ts = as_list(params["t"])
            cases = [(LambdaFunction.constant(t), s) for t in ts]
            ests = interval_hit_probs(StandardGaussian(), N, cases, trials, seed)
            for t, est in zip(ts, ests):
                exact = gaussian_interval_prob(N, t, s)
                bound = gaussian_interval_bound(N, s)
                ok_exact = abs(est.p_hat - exact) <= 3 * _binomial_sigma(exact, trials)
                ok_bound = est.p_hat <= bound + 3 * est.std_err
                res.rows.append({"experiment": res.name, "case": f"t={t:g}", "seed": seed, "N": N, "t": t, "s": s,
                                 **_estimate_cols(est), "exact": exact, "bound": bound,
                                 "pass_exact": ok_exact, "pass_bound": ok_bound, "pass": ok_exact and ok_bound})
    return res


# -- gaussian-strip --------------------------------------------------------------

def run_gaussian_strip(params: dict) -> ExperimentResult:
    res = ExperimentResult("gaussian-strip")
    seed, trials = params["seed"], params["trials"]
    lam = LambdaFunction.quadratic_eta()
    for s in as_list(params["s"]):
        quad = oracles.gaussian_strip_prob(s)
        est = interval_hit_prob(StandardGaussian(), 2, lam, s, trials, seed)
        ok = abs(est.p_hat - quad) <= 3 * _binomial_sigma(quad, trials)
        res.rows.append({"experiment": res.name, "case": f"s={s:g}", "seed": seed, "N": 2, "s": s,
                         **_estimate_cols(est), "quadrature": quad, "bound": "", "pass": ok})
    return res


# -- verify-sandwich -------------------------------------------------------------

SANDWICH_EVENTS = 20


def run_verify_sandwich(params: dict) -> ExperimentResult:
    res = ExperimentResult("verify-sandwich")
    seed, trials = params["seed"], params["trials"]
    for dist_name in as_list(params["dist"]):
        dist = make_dist(dist_name, params["a"], params["ell"])
        for N in as_list(params["N"]):
            p = build_partition(params["a"], params["ell"], N, params.get("M"))
            gen = block_generator(seed, 98, N)
            for e in range(SANDWICH_EVENTS):
                k = tuple(int(v) for v in gen.integers(1, p.M + 1, N))
                event = random_halfspace_events(N, p, k, e + 1, seed)[e]
                out = sandwich_check(dist, k, event, trials, seed, M=p.M, tag=e)
                res.rows.append({"experiment": res.name, "case": f"{dist_name}:event{e}", "seed": seed,
                                 "dist": dist_name, "N": N, "M": p.M, "cube": ";".join(map(str, k)),
                                 "p_true": out.p_true, "p_uniform": out.p_uniform, "estimate": out.ratio,
                                 "ratio_lo": out.ratio_lo, "ratio_hi": out.ratio_hi, "sigma": out.sigma,
                                 "bound": out.ratio_hi, "pass": out.ok})
    return res


# -- verify-smooth ---------------------------------------------------------------

SMOOTH_S_FRACTIONS = (0.1, 0.3, 0.6)


def run_verify_smooth(params: dict) -> ExperimentResult:
    res = ExperimentResult("verify-smooth")
    seed, trials, a, ell = params["seed"], params["trials"], params["a"], params["ell"]
    Ns = as_list(params["N"])
    explicit_s = as_list(params.get("s"))
    for N in Ns:
        for s in explicit_s:
            if not 0 < s < ell / N**2:
                raise PreconditionError(f"verify-smooth needs 0 < s < ell/N^2 = {ell / N**2:g} for N={N}, got {s}")
    for dist_name in as_list(params["dist"]):
        dist = make_dist(dist_name, a, ell)
        centre = dist.mean()

        def lambdas(N, s):
            return [LambdaFunction.constant(centre - 0.5 * s), LambdaFunction.fiber_midpoint(a, ell, s)]

        cal = _calibrate(dist, Ns, explicit_s, lambdas, trials, seed, ell)
        for row in cal.rows:
            est = row["estimate"]
            res.rows.append({"experiment": res.name, "case": f"{dist_name}:{row['lambda']}", "seed": seed,
                             "dist": dist_name, "N": row["N"], "s": row["s"], **_estimate_cols(est),
                             "C_hat": row["C_hat"], "bound": "", "pass": True})
        res.rows.append({"experiment": res.name, "case": f"{dist_name}:summary", "seed": seed, "dist": dist_name,
                         "C_hat": cal.global_C,
                         "C_per_N": ";".join(f"{N}:{c:.6g}" for N, c in cal.per_N.items()),
                         "spread": cal.spread, "bound": 2.0, "pass": cal.stable})
    return res


def _calibrate(dist, Ns, explicit_s, lambdas, trials, seed, ell):
    if not explicit_s:
        return calibrate_smooth_constant(dist, Ns, SMOOTH_S_FRACTIONS, lambdas, trials, seed)
    # explicit s values: express each as a fraction of the per-N window
    per_N, rows = {}, []
    for N in Ns:
        cal = calibrate_smooth_constant(dist, [N], [s * N**2 / ell for s in explicit_s], lambdas, trials, seed)
        per_N.update(cal.per_N)
        rows += cal.rows
    values = list(per_N.values())
    spread = max(values) / min(values) if min(values) > 0 else math.inf
    return SmoothCalibration(per_N, max(values), spread, rows)


# -- anderson-evc ----------------------------------------------------------------

SHIFT_INSTANCES = 1000


def band_centre(graph, dist) -> float:
    """Adjacency eigenvalue closest to zero, shifted by the potential mean."""
    mu = sym_eigenvalues(graph.adjacency())
    return float(mu[np.argmin(np.abs(mu))] + dist.mean())


def run_anderson_evc(params: dict) -> ExperimentResult:
    res = ExperimentResult("anderson-evc")
    seed, trials = params["seed"], params["trials"]
    dist = make_dist(as_list(params["dist"])[0], params["a"], params["ell"])
    for spec in as_list(params["graph"]):
        graph = parse_graph(spec)
        V = sample_range(dist, graph.n, 0, SHIFT_INSTANCES, seed)
        dev = float(shift_identity_deviations(graph, V).max())
        res.rows.append({"experiment": res.name, "case": f"shift:{spec}", "seed": seed, "graph": spec,
                         "N": graph.n, "trials": SHIFT_INSTANCES, "max_rel_dev": dev, "bound": 1e-10,
                         "pass": dev <= 1e-10})
    for spec in as_list(params["graph"]):
        graph = parse_graph(spec)
        N = graph.n
        ts = as_list(params.get("t")) or [band_centre(graph, dist)]
        for t, s in itertools.product(ts, as_list(params["s"])):
            out = evc_estimate(graph, dist, t, s, trials, seed)
            sigma = out.combined_std_err
            chain = min(1.0, N * 3.0 * N**3 * s / dist.ell) if isinstance(dist, Uniform) else math.inf
            ok_union = out.p_trace.p_hat <= out.p_sum_bound + 3 * sigma
            ok_bound = out.p_trace.p_hat <= chain + 3 * sigma
            res.rows.append({"experiment": res.name, "case": f"evc:{spec}", "seed": seed, "graph": spec, "N": N,
                             "t": t, "s": s, **_estimate_cols(out.p_trace), "p_sum_bound": out.p_sum_bound,
                             "combined_std_err": sigma, "union_bound": out.union_bound, "bound": chain,
                             "pass_union": ok_union, "pass_bound": ok_bound, "pass": ok_union and ok_bound})
    return res


# -- rng-selftest ----------------------------------------------------------------

def run_rng_selftest(params: dict) -> ExperimentResult:
    res = ExperimentResult("rng-selftest")
    seed, draws = params["seed"], params["trials"]
    n = draws // 2

    def row(case, estimate, bound, ok, **extra):
        res.rows.append({"experiment": res.name, "case": case, "seed": seed, "estimate": estimate,
                         "bound": bound, **extra, "pass": bool(ok)})

    U = sample_range(Uniform(), 2, 0, n, seed).ravel()
    m = U.size
    mean_sigma = math.sqrt(1 / 12 / m)
    row("uniform-mean", float(U.mean()), 3 * mean_sigma, abs(U.mean() - 0.5) <= 3 * mean_sigma, target=0.5)
    var_sigma = math.sqrt((1 / 80 - 1 / 144) / m)
    var = float(U.var())
    row("uniform-variance", var, 3 * var_sigma, abs(var - 1 / 12) <= 3 * var_sigma, target=1 / 12)

    E = np.sort(sample_range(exponential_density(), 2, 0, n, seed).ravel())
    exact = np.expm1(E) / math.expm1(1.0)
    ecdf_hi = np.arange(1, E.size + 1) / E.size
    ks = float(max(np.max(ecdf_hi - exact), np.max(exact - (ecdf_hi - 1 / E.size))))
    ks_bound = max(0.002, 1.95 / math.sqrt(E.size))  # Kolmogorov critical value at level 0.001
    row("smooth-ks", ks, ks_bound, ks < ks_bound, target=0.0)

    first = sample_iid(Uniform(), 4, 12345, seed).values
    again = sample_iid(Uniform(), 4, 12345, seed).values
    row("determinism", float(np.max(np.abs(first - again))), 0.0, np.array_equal(first, again))

    event = lambda X: X[:, 0] < 0.5  # noqa: E731
    total = min(draws, 200_000)
    counts = []
    for k in (1, 2, 7, 64):
        edges = np.linspace(0, total, k + 1).astype(int)
        counts.append(sum(count_events(Uniform(), 3, event, lo, hi, seed) for lo, hi in zip(edges[:-1], edges[1:])))
    row("partition-invariance", float(counts[0]), 0.0, len(set(counts)) == 1,
        counts=";".join(map(str, counts)))

    p_true, covered = 0.3, 0
    for rep in range(200):
        est = estimate_event_prob(Uniform(), 2, lambda X: X[:, 0] < p_true, 1000, (seed + rep + 1) % 2**64)
        covered += est.ci95[0] <= p_true <= est.ci95[1]
    row("ci-coverage", covered / 200, 0.9, covered >= 180, covered=covered)
    return res


@dataclass(frozen=True)
class Experiment:
    name: str
    runner: Callable[[dict], ExperimentResult]
    defaults: dict
    description: str


_COMMON = {"a": 0.0, "ell": 1.0, "seed": 20261015}

EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment("verify-lemma", run_verify_lemma,
                   {**_COMMON, "N": list(range(2, 33)), "trials": 1_000_000},
                   "short-fiber probability: exact vs both lemma constants, plus Monte Carlo"),
        Experiment("verify-theorem-uniform", run_verify_theorem_uniform,
                   {**_COMMON, "N": [2, 3, 4, 6], "ell": [1.0, 2.0], "s": [1e-3, 3e-3, 1e-2],
                    "trials": 1_000_000},
                   "uniform samples: interval-hit probability vs 3 N^3 s / ell"),
        Experiment("verify-smooth", run_verify_smooth,
                   {**_COMMON, "N": [2, 3, 4], "dist": ["exp", "truncgauss"], "trials": 200_000},
                   "smooth densities: fitted C in P <= C N s and its stability across N"),
        Experiment("verify-sandwich", run_verify_sandwich,
                   {**_COMMON, "N": [2, 3], "dist": ["exp"], "trials": 100_000},
                   "cube-conditioned law vs uniform law on the cube, ratio within exp(+-2 alpha)"),
        Experiment("gaussian-baseline", run_gaussian_baseline,
                   {**_COMMON, "N": [2, 4, 8], "s": 0.1, "t": [-0.2, 0.0, 0.15], "trials": 1_000_000},
                   "Gaussian samples: exact normal interval probability and density bound"),
        Experiment("gaussian-strip", run_gaussian_strip,
                   {**_COMMON, "s": [0.05, 0.1], "trials": 10_000_000},
                   "planar Gaussian strip xi in [eta^2, eta^2 + s]: quadrature vs Monte Carlo"),
        Experiment("anderson-evc", run_anderson_evc,
                   {**_COMMON, "graph": ["path:4", "path:6", "cycle:8", "grid:3x3"], "dist": "uniform",
                    "s": [1e-3, 1e-2], "t": None, "trials": 200_000},
                   "random DSO: shift identity and Wegner-type eigenvalue concentration"),
        Experiment("fiber-oracle", run_fiber_oracle,
                   {**_COMMON, "N": list(range(2, 17)), "trials": 100_000},
                   "closed-form fiber length vs line-clipping oracle"),
        Experiment("rng-selftest", run_rng_selftest,
                   {**_COMMON, "trials": 1_000_000},
                   "generator moments, KS distance, determinism, partition invariance, CI coverage"),
    ]
}


def resolve_params(name: str, params: dict | None = None) -> dict:
    merged = dict(EXPERIMENTS[name].defaults)
    merged.update(params or {})
    return merged


def run(name: str, params: dict | None = None) -> ExperimentResult:
    """Run experiment ``name`` with ``params`` layered over its defaults."""
    if name not in EXPERIMENTS:
        raise KeyError(name)
    return EXPERIMENTS[name].runner(resolve_params(name, params))
