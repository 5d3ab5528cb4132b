"""Derivative-free minimisation of limit eigenvalues over thickness budgets.

Profiles are piecewise constant on N equal-parameter arcs. The search is a
compass-type pattern search: every poll evaluates all candidate moves of the
current step (optionally on a thread pool), picks the best strict
improvement with a fixed tie-break, and halves the step after a failed poll.
Because the whole poll is evaluated before choosing, the result does not
depend on the number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assembly import boundary_matrix, volume_forms
from .eigensolve import solve_generalized
from .errors import ConfigError, MeshError, ProfileError
from .geometry.curves import Interval
from .geometry.mesh import INTERIOR, build_mesh
from .profiles import (
    ThicknessProfile,
    _arc_lengths,
    boundary_mass,
    effective_profile,
    oscillating_profile,
    robin_coefficient,
)

CONVERGED = "CONVERGED"
NOT_CONVERGED = "NOT_CONVERGED"
_DENSE_EVAL = 400


class LimitEvaluator:
    """Lowest ``k`` limit eigenvalues as a function of the thickness profile.

    The mesh and the volume forms are built once; each evaluation only
    assembles the boundary term. Results are cached by profile.
    """

    def __init__(self, spec, beta: float, resolution: float, k: int):
        if not beta > 0:
            raise ConfigError(f"beta must be positive, got {beta}")
        self.spec = spec
        self.beta = float(beta)
        self.k = int(k)
        self.resolution = float(resolution)
        self.mesh = build_mesh(spec, ThicknessProfile.constant(0.0), 0.0, resolution)
        self.K, self.M = volume_forms(self.mesh, INTERIOR)
        # dense LAPACK only pays off for small meshes
        dense = self.mesh.n_vertices <= _DENSE_EVAL
        self._Md = self.M.toarray() if dense else None
        self._Kd = self.K.toarray() if dense else None
        self._facets = np.arange(self.mesh.facets.shape[0])
        self._cache = {}
        self.n_solves = 0

    def eigenvalues(self, h: ThicknessProfile) -> np.ndarray:
        key = (h.kind, h.values, h.cos_coeffs, h.sin_coeffs)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        robin = robin_coefficient(h, self.beta)
        spec = self.spec
        B = boundary_matrix(
            self.mesh, self._facets, lambda s: robin(spec.to_unit(s)), robin.breakpoints()
        )
        if self._Kd is not None:
            A = self._Kd + B.toarray()
            lam = sla.eigh(A, self._Md, eigvals_only=True, subset_by_index=[0, self.k - 1])
        else:
            lam = solve_generalized(self.K + B, self.M, self.k, method="shift-invert").eigenvalues
        self.n_solves += 1
        self._cache[key] = lam
        return lam


@dataclass
class OptimizationRun:
    target: object
    m: float
    n_arcs: int
    best_profile: ThicknessProfile
    best_value: float
    baseline_value: float
    history: list = field(default_factory=list)  # (iter, value, mass, values)
    status: str = NOT_CONVERGED
    evaluations: int = 0

    @property
    def saturation_residual(self) -> float:
        return abs(self.history[-1][2] - self.m) if self.history else math.nan


def arc_weights(spec, n_arcs: int) -> np.ndarray:
    """Boundary measure carried by each arc (endpoint counting on an interval)."""
    if isinstance(spec, Interval):
        if n_arcs != 2:
            raise ConfigError("an interval profile has exactly two values (one per endpoint)")
        return np.ones(2)
    return _arc_lengths(spec, n_arcs)


def _moves(n, weights, saturated):
    """Unit moves in value space; each is scaled by the step (a mass)."""
    out = []
    for i in range(n):
        for j in range(n):
            if i != j:
                d = np.zeros(n)
                d[i] = 1.0 / weights[i]
                d[j] = -1.0 / weights[j]
                out.append(d)
    if not saturated:
        for i in range(n):
            for sgn in (1.0, -1.0):
                d = np.zeros(n)
                d[i] = sgn / weights[i]
                out.append(d)
    return out


def _search(objective, x0, weights, m, cap, saturated, budget, step0, tol, seed, threads):
    """Pattern search; returns (best x, best value, history, status, evals)."""
    n = x0.size
    moves = _moves(n, weights, saturated)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(moves))
    moves = [moves[i] for i in order]
    x = x0.copy()
    fx = objective(x)
    evals = 1
    history = [(0, fx, float(weights @ x), x.copy())]
    step = step0
    it = 0
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        while step >= tol:
            cands = []
            for d in moves:
                y = x + step * d
                if np.any(y < 0) or np.any(y > cap):
                    continue
                if not saturated and weights @ y > m + 1e-12 * max(1.0, m):
                    continue
                cands.append(y)
            if evals + len(cands) > budget:
                return x, fx, history, NOT_CONVERGED, evals
            vals = list(pool.map(objective, cands)) if pool else [objective(c) for c in cands]
            evals += len(cands)
            best = None
            for c, v in zip(cands, vals):
                if v < fx - 1e-14 * max(1.0, abs(fx)) and (best is None or v < best[1]):
                    best = (c, v)
            it += 1
            if best is None:
                step *= 0.5
            else:
                x, fx = best
                if saturated:
                    x = _resaturate(x, weights, m)
                    fx = objective(x)
                    evals += 1
            history.append((it, fx, float(weights @ x), x.copy()))
    finally:
        if pool:
            pool.shutdown()
    return x, fx, history, CONVERGED, evals


def _resaturate(x, weights, m):
    """Remove rounding drift from the mass by rescaling."""
    mass = float(weights @ x)
    return x * (m / mass) if mass > 0 else x


def _setup(spec, m, n_arcs, beta, resolution, k, cap, evaluator):
    if not m > 0:
        raise ConfigError(f"mass budget must be positive, got {m}")
    if n_arcs < 1:
        raise ConfigError("N_arcs must be at least 1")
    weights = arc_weights(spec, n_arcs)
    perimeter = float(weights.sum())
    cap = 10.0 * m / perimeter if cap is None else float(cap)
    ev = evaluator or LimitEvaluator(spec, beta, resolution, k)
    if ev.k < k:
        raise ConfigError(f"evaluator computes {ev.k} eigenvalues, {k} needed")
    x0 = np.full(n_arcs, m / perimeter)
    return weights, cap, ev, x0


def _profile(x):
    return ThicknessProfile.piecewise(tuple(float(v) for v in x))


def minimize_lambda(
    j: int, m: float, spec, beta: float, n_arcs: int, budget: int = 2000, *,
    resolution: float = 0.05, seed: int = 0, threads: int = 1, tol: float | None = None,
    cap: float | None = None, evaluator: LimitEvaluator | None = None,
) -> OptimizationRun:
    """Minimise lambda^j (1-based) over profiles with boundary mass exactly m."""
    if j < 1:
        raise ConfigError("eigenvalue index j is 1-based")
    weights, cap, ev, x0 = _setup(spec, m, n_arcs, beta, resolution, j, cap, evaluator)

    def objective(x):
        return float(ev.eigenvalues(_profile(x))[j - 1])

    return _run(("lambda", j), objective, x0, weights, m, cap, True, budget, tol, seed, threads)


def minimize_composition(
    f, indices, m: float, spec, beta: float, n_arcs: int, budget: int = 2000, *,
    resolution: float = 0.05, seed: int = 0, threads: int = 1, tol: float | None = None,
    cap: float | None = None, evaluator: LimitEvaluator | None = None,
) -> OptimizationRun:
    """Minimise f(lambda^{j1}, ..., lambda^{jd}) over the full budget simplex."""
    idx = [int(i) for i in indices]
    if not idx or min(idx) < 1:
        raise ConfigError("indices are 1-based and non-empty")
    weights, cap, ev, x0 = _setup(spec, m, n_arcs, beta, resolution, max(idx), cap, evaluator)

    def objective(x):
        lam = ev.eigenvalues(_profile(x))
        return float(f(*[lam[i - 1] for i in idx]))

    return _run(("composition", tuple(idx)), objective, x0, weights, m, cap, False, budget, tol,
                seed, threads)


def _run(target, objective, x0, weights, m, cap, saturated, budget, tol, seed, threads):
    step0 = 0.25 * m
    tol = 1e-6 * m if tol is None else tol
    baseline = objective(x0)
    x, fx, hist, status, evals = _search(
        objective, x0, weights, m, cap, saturated, budget, step0, tol, seed, threads
    )
    return OptimizationRun(
        target=target, m=m, n_arcs=x0.size, best_profile=_profile(x), best_value=fx,
        baseline_value=baseline, history=hist, status=status, evaluations=evals,
    )


def enumerate_two_arcs(objective_of_profile, m: float, spec, n_grid: int = 101, saturated=True):
    """Exhaustive grid over two-value profiles.

    Saturated: h_1 on a uniform grid of [0, m / w_1] with h_2 fixing the mass.
    Otherwise the full n_grid x n_grid box [0, m/w_1] x [0, m/w_2] cut to the budget.
    Returns (best value, best values tuple, grid spacing in h_1).
    """
    w = arc_weights(spec, 2)
    g1 = np.linspace(0.0, m / w[0], n_grid)
    best = (math.inf, None)
    if saturated:
        pairs = [(a, (m - w[0] * a) / w[1]) for a in g1]
    else:
        g2 = np.linspace(0.0, m / w[1], n_grid)
        pairs = [(a, b) for a in g1 for b in g2 if w[0] * a + w[1] * b <= m * (1 + 1e-12)]
    for a, b in pairs:
        v = objective_of_profile(ThicknessProfile.piecewise((float(a), max(float(b), 0.0))))
        if v < best[0]:
            best = (v, (float(a), float(b)))
    return best[0], best[1], float(g1[1] - g1[0])


def _dominated(h1: ThicknessProfile, h2: ThicknessProfile, spec) -> bool:
    n = 4096
    tau = np.concatenate([np.arange(n) / n, [1.0]])
    if isinstance(spec, Interval):
        tau = np.array([0.0, 1.0])
    # also test just inside each breakpoint of either profile
    bps = np.concatenate([h1.breakpoints(), h2.breakpoints()])
    tau = np.concatenate([tau, np.clip(bps + 1e-9, 0, 1), np.clip(bps - 1e-9, 0, 1)])
    return bool(np.all(h1(tau) <= h2(tau) + 1e-14))


def verify_monotonicity(h1, h2, spec, beta: float, j_max: int, *, resolution: float = 0.05,
                        evaluator: LimitEvaluator | None = None):
    """Per j, whether lambda^j(h1) >= lambda^j(h2) up to 1e-8 relative; h1 <= h2 required."""
    if not _dominated(h1, h2, spec):
        raise ProfileError("monotonicity check needs h1 <= h2 pointwise")
    ev = evaluator or LimitEvaluator(spec, beta, resolution, j_max)
    l1 = ev.eigenvalues(h1)[:j_max]
    l2 = ev.eigenvalues(h2)[:j_max]
    ok = l1 >= l2 - 1e-8 * np.maximum(1.0, l1)
    return [
        {"j": j + 1, "lambda_h1": float(a), "lambda_h2": float(b), "pass": bool(o)}
        for j, (a, b, o) in enumerate(zip(l1, l2, ok))
    ]


@dataclass
class ContinuityTable:
    k_list: list
    h_eff: float
    lambda_eff: np.ndarray
    lambda_k: np.ndarray  # rows follow k_list
    errors: np.ndarray

    def decreasing(self, j: int = 0) -> bool:
        e = self.errors[:, j]
        return bool(np.all(np.diff(e) < 0))


def continuity_experiment(a: float, b: float, k_list, spec, beta: float, j_max: int, *,
                          resolution: float = 0.02, evaluator: LimitEvaluator | None = None,
                          threads: int = 1) -> ContinuityTable:
    """lambda^j of the 2k-arc oscillating profiles against the effective constant profile."""
    if a < 0 or b < 0:
        raise ProfileError("a and b must be non-negative")
    ks = [int(k) for k in k_list]
    if any(k2 <= k1 for k1, k2 in zip(ks[:-1], ks[1:])):
        raise ConfigError("k_list must be increasing")
    ev = evaluator or LimitEvaluator(spec, beta, resolution, j_max)
    if not isinstance(spec, Interval):
        finest = float(arc_weights(spec, 2 * ks[-1]).min())
        if ev.resolution > finest:
            raise MeshError(
                f"mesh resolution {ev.resolution} does not resolve arcs of length {finest:.4g}"
            )
    h_eff = effective_profile(a, b, beta)
    lam_eff = ev.eigenvalues(h_eff)[:j_max]
    profiles = [oscillating_profile(a, b, k) for k in ks]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            lams = list(pool.map(ev.eigenvalues, profiles))
    else:
        lams = [ev.eigenvalues(p) for p in profiles]
    lam_k = np.array([lk[:j_max] for lk in lams])
    return ContinuityTable(
        k_list=ks, h_eff=float(h_eff.values[0]), lambda_eff=lam_eff, lambda_k=lam_k,
        errors=np.abs(lam_k - lam_eff[None, :]),
    )


def mass_of(run: OptimizationRun, spec) -> float:
    return boundary_mass(run.best_profile, spec)
