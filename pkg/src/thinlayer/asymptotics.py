"""First-order behaviour of the two-phase spectrum as the layer thins.

The correction quotient of a limit eigenfunction v (eigenvalue lam) is

    Q(v) = [ int_dOmega c1 v^2 - lam int_dOmega c2 v^2 ] / int_Omega v^2,
    c1 = beta H h (2 + beta h) / (2 (1 + beta h)^2),
    c2 = h (3 + 3 beta h + beta^2 h^2) / (3 (1 + beta h)^2),

with H the curvature of the boundary (0 in one dimension). On an
eigenspace it is a ratio of quadratic forms whose extremes bracket the
slope of lam_eps - lam at eps = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assembly import boundary_matrix, volume_forms
from .errors import AsymptoticsError
from .geometry.mesh import INTERIOR, LAYER, DomainMesh, fiber_sample


def curvature_weight(h, beta: float, H):
    h = np.asarray(h, dtype=float)
    return beta * H * h * (2.0 + beta * h) / (2.0 * (1.0 + beta * h) ** 2)


def inertia_weight(h, beta: float):
    h = np.asarray(h, dtype=float)
    bh = beta * h
    return h * (3.0 + 3.0 * bh + bh * bh) / (3.0 * (1.0 + bh) ** 2)


def q_density(h, beta: float, lam: float, H):
    """Pointwise boundary integrand of the numerator, per unit v^2."""
    return curvature_weight(h, beta, H) - lam * inertia_weight(h, beta)


def q_numerator_form(mesh: DomainMesh, h, beta: float, lam: float):
    """Boundary matrix B with v.B.v the numerator of Q on a mesh of Omega."""
    if mesh.has_layer:
        raise AsymptoticsError("Q is evaluated on limit-problem meshes (no layer)")
    spec = mesh.spec

    def coeff(s):
        return q_density(h(spec.to_unit(s)), beta, lam, spec.curvature(s))

    return boundary_matrix(mesh, np.arange(mesh.facets.shape[0]), coeff, h.breakpoints())


def q_quotient(v, h, lambda_j: float, mesh: DomainMesh, beta: float) -> float:
    v = np.asarray(v, dtype=float)
    _, M = volume_forms(mesh, INTERIOR)
    den = float(v @ (M @ v))
    if den == 0:
        raise AsymptoticsError("Q is undefined for a field with zero interior mass")
    B = q_numerator_form(mesh, h, beta, lambda_j)
    return float(v @ (B @ v)) / den


def q_closed_form(h: float, beta: float, lam: float, H: float, trace_ratio: float) -> float:
    """Q for constant h and curvature, given int_dOmega v^2 / int_Omega v^2."""
    return float(q_density(h, beta, lam, H)) * trace_ratio


def eigenspace_extremes(basis, h, lambda_j: float, mesh: DomainMesh, beta: float):
    """(Q_min, Q_max, minimiser) of Q over the span of ``basis`` columns."""
    V = np.asarray(basis, dtype=float)
    if V.ndim == 1:
        V = V[:, None]
    if V.shape[1] == 0:
        raise AsymptoticsError("empty eigenspace basis")
    _, M = volume_forms(mesh, INTERIOR)
    B = q_numerator_form(mesh, h, beta, lambda_j)
    b = V.T @ (B @ V)
    d = V.T @ (M @ V)
    b = 0.5 * (b + b.T)
    d = 0.5 * (d + d.T)
    try:
        q, c = sla.eigh(b, d)
    except np.linalg.LinAlgError as exc:
        raise AsymptoticsError(f"singular mass form on the eigenspace: {exc}") from exc
    return float(q[0]), float(q[-1]), V @ c[:, 0]


def layer_profile_prediction(v_trace, h_sigma: float, beta: float, eps: float, t):
    """Linear layer profile v(sigma) (1 - beta t / (eps (1 + beta h)))."""
    t = np.asarray(t, dtype=float)
    depth = eps * h_sigma
    if np.any(t < -1e-14 * max(depth, 1.0)) or np.any(t > depth * (1 + 1e-12) + 1e-300):
        raise AsymptoticsError(f"t outside the layer [0, {depth}]")
    return v_trace * (1.0 - beta * t / (eps * (1.0 + beta * h_sigma)))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    curvature: float
    residual: float
    quotients: np.ndarray


def slope_estimate(sweep, lambda_limit: float) -> SlopeFit:
    """Least-squares fit lam_eps - lam = s eps + q eps^2 over a sweep.

    ``sweep`` holds (eps, lam_eps) pairs; ``residual`` is the largest
    absolute misfit of the quadratic model.
    """
    pts = np.asarray(sweep, dtype=float).reshape(-1, 2)
    eps, lam = pts[:, 0], pts[:, 1]
    if np.unique(eps).size < 3:
        raise AsymptoticsError("slope extraction needs at least 3 distinct eps values")
    d = lam - lambda_limit
    # scale columns so the normal equations stay well conditioned
    e0 = eps.max()
    X = np.column_stack([eps / e0, (eps / e0) ** 2])
    coef, *_ = np.linalg.lstsq(X, d, rcond=None)
    fit = X @ coef
    return SlopeFit(
        slope=float(coef[0] / e0),
        curvature=float(coef[1] / e0**2),
        residual=float(np.max(np.abs(d - fit))),
        quotients=d / eps,
    )


def default_eps_grid(h_sup: float, n: int = 5) -> np.ndarray:
    e0 = 0.02 * min(1.0, 1.0 / h_sup) if h_sup > 0 else 0.02
    return e0 * 0.5 ** np.arange(n)


def sandwich_tolerance(lambda_j: float, residual: float) -> float:
    return max(1e-3 * abs(lambda_j), 2.0 * residual)


def nonconcentration_check(u_eps, mesh: DomainMesh):
    """(layer mass, layer mass / eps) of ``u_eps`` normalised in L2(Omega_eps)."""
    u = np.asarray(u_eps, dtype=float)
    if not mesh.has_layer:
        return 0.0, 0.0
    _, M_in = volume_forms(mesh, INTERIOR)
    _, M_l = volume_forms(mesh, LAYER)
    total = float(u @ (M_in @ u)) + float(u @ (M_l @ u))
    if total == 0:
        raise AsymptoticsError("zero field")
    layer = float(u @ (M_l @ u)) / total
    return layer, layer / mesh.eps


def ratio_trend(ratios, tol: float = 0.2) -> list:
    """Flags, per consecutive pair, whether the ratio grew by more than ``tol``."""
    r = np.asarray(ratios, dtype=float)
    return [bool(b > a * (1 + tol)) for a, b in zip(r[:-1], r[1:])]


def ratio_stable(ratios, tol: float = 0.2) -> bool:
    """Every consecutive change of the ratio is within ``tol`` relative."""
    r = np.asarray(ratios, dtype=float)
    return bool(np.all(np.abs(r[1:] - r[:-1]) <= tol * np.abs(r[:-1])))


def aligned_l2_distance(u, v, M) -> float:
    """||u - s v||_M for the sign s in {+1, -1} that minimises it; both normalised."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u = u / np.sqrt(u @ (M @ u))
    v = v / np.sqrt(v @ (M @ v))
    if u @ (M @ v) < 0:
        v = -v
    w = u - v
    return float(np.sqrt(max(w @ (M @ w), 0.0)))


def subspace_distance(U, V, M) -> float:
    """Sine of the largest principal angle between span(U) and span(V) in the M inner product."""
    U = np.atleast_2d(np.asarray(U, dtype=float).T).T
    V = np.atleast_2d(np.asarray(V, dtype=float).T).T
    def orth(X):
        g = X.T @ (M @ X)
        w, q = np.linalg.eigh(0.5 * (g + g.T))
        return X @ (q / np.sqrt(w))
    Qu, Qv = orth(U), orth(V)
    s = np.linalg.svd(Qu.T @ (M @ Qv), compute_uv=False)
    c = float(np.clip(s.min(), 0.0, 1.0))
    return float(np.sqrt(max(1.0 - c * c, 0.0)))


def interior_restriction(u_eps, mesh_eps: DomainMesh):
    """Values of a two-phase field on the vertices of Omega (numbered first)."""
    return np.asarray(u_eps, dtype=float)[: mesh_eps.n_interior]


def fiber_regression(mesh_eps: DomainMesh, u_eps, v_limit, beta: float, s_list, n_samples=16):
    """R^2 of the layer samples of ``u_eps`` against the predicted linear profile.

    ``v_limit`` is the limit eigenfunction on the interior vertices, already
    sign-aligned and scaled like ``u_eps``; its trace at each fiber root sets
    the predicted profile.
    """
    spec = mesh_eps.spec
    bv = mesh_eps.boundary_vertices
    bs = mesh_eps.boundary_params
    obs, pred = [], []
    for s in s_list:
        t, vals = fiber_sample(mesh_eps, u_eps, s, n_samples)
        hs = float(mesh_eps.profile(spec.to_unit(s)))
        trace = float(np.interp(s, bs, v_limit[bv], period=None if spec.dim == 1 else 2 * np.pi))
        obs.append(vals)
        pred.append(layer_profile_prediction(trace, hs, beta, mesh_eps.eps, t))
    obs = np.concatenate(obs)
    pred = np.concatenate(pred)
    ss_res = float(np.sum((obs - pred) ** 2))
    ss_tot = float(np.sum((obs - obs.mean()) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else 0.0
    return 1.0 - ss_res / ss_tot


@dataclass
class AsymptoticReport:
    j: int
    lambda_j: float
    cluster: list
    Q_min: float
    Q_max: float
    sweep: list = field(default_factory=list)  # (eps, lam_eps, quotient)
    extrapolated_slope: float = float("nan")
    fit_residual: float = float("nan")
    verdicts: dict = field(default_factory=dict)

    def judge(self):
        """Fill the sandwich and (first index of a cluster) equality verdicts."""
        delta = sandwich_tolerance(self.lambda_j, self.fit_residual)
        s = self.extrapolated_slope
        self.verdicts["sandwich"] = bool(self.Q_min - delta <= s <= self.Q_max + delta)
        if self.j == min(self.cluster):
            ref = max(abs(self.Q_min), 1e-300)
            self.verdicts["equality"] = bool(abs(s - self.Q_min) <= 1e-2 * ref)
        return self.verdicts


def build_report(j, lambda_j, cluster, q_range, sweep) -> AsymptoticReport:
    """Report for index ``j`` (1-based, as are the ``cluster`` entries) from an eps sweep."""
    fit = slope_estimate([(e, lam) for e, lam in sweep], lambda_j)
    rep = AsymptoticReport(
        j=j,
        lambda_j=float(lambda_j),
        cluster=list(cluster),
        Q_min=float(q_range[0]),
        Q_max=float(q_range[1]),
        sweep=[(float(e), float(lam), float(q)) for (e, lam), q in zip(sweep, fit.quotients)],
        extrapolated_slope=fit.slope,
        fit_residual=fit.residual,
    )
    rep.judge()
    return rep
