"""P1 finite element pencils for the two-phase and limit problems.

Volume integrals are taken on the straight-sided mesh. Boundary integrals
use the analytic curve: a facet between parameters ``s_a`` and ``s_b`` is
integrated in ``s`` with the exact arc-length density (of the boundary, or
of its offset ``sigma + eps h nu0`` for OUTER facets), the P1 trace being
linear in ``s``. Facets are split at the jumps of piecewise coefficients, so
the quadrature is exact for piecewise-constant thickness profiles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, SolverError
from .geometry.curves import TWO_PI
from .geometry.mesh import INTERIOR, LAYER, OUTER, DomainMesh
from .profiles import RobinCoefficient

_GAUSS_X, _GAUSS_W = np.polynomial.legendre.leggauss(3)


@dataclass(frozen=True, eq=False)
class OperatorPencil:
    """Symmetric pencil (A, M); ``kind`` is ``"limit"`` or ``"twophase"``."""

    A: sp.csr_matrix
    M: sp.csr_matrix
    mesh: DomainMesh
    kind: str
    eps: float = 0.0
    beta: float | None = None
    robin: RobinCoefficient | None = None
    mass_interior: sp.csr_matrix | None = None
    mass_layer: sp.csr_matrix | None = None

    @property
    def n_dofs(self) -> int:
        return self.A.shape[0]


def _sym(m: sp.spmatrix) -> sp.csr_matrix:
    m = m.tocsr()
    # a + b == b + a in floating point, so this is exactly symmetric
    out = ((m + m.T) * 0.5).tocsr()
    out.sort_indices()
    return out


def volume_forms(mesh: DomainMesh, region: int):
    """Stiffness and mass matrices restricted to the cells of one region."""
    n = mesh.n_vertices
    cells = mesh.cells[mesh.cell_region == region]
    v = mesh.vertices
    if cells.shape[0] == 0:
        z = sp.csr_matrix((n, n))
        return z, z
    if mesh.dim == 1:
        hcell = v[cells[:, 1], 0] - v[cells[:, 0], 0]
        ke = np.array([[1.0, -1.0], [-1.0, 1.0]])[None] / hcell[:, None, None]
        me = np.array([[2.0, 1.0], [1.0, 2.0]])[None] * (hcell / 6.0)[:, None, None]
    else:
        p0, p1, p2 = v[cells[:, 0]], v[cells[:, 1]], v[cells[:, 2]]
        e = np.stack([p2 - p1, p0 - p2, p1 - p0], axis=1)
        area = 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))
        if np.any(area <= 0):
            raise AssemblyError("mesh has inverted or degenerate cells")
        ke = np.einsum("cik,cjk->cij", e, e) / (4.0 * area)[:, None, None]
        me = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12.0)[:, None, None]
    k = cells.shape[1]
    rows = np.repeat(cells, k, axis=1).ravel()
    cols = np.tile(cells, (1, k)).ravel()
    K = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n))
    M = sp.coo_matrix((me.ravel(), (rows, cols)), shape=(n, n))
    return _sym(K), _sym(M)


@dataclass(frozen=True)
class FacetQuadrature:
    """Flattened boundary quadrature: point q sits on facet ``facet[q]``."""

    facet: np.ndarray
    nodes: np.ndarray  # (nq, 2) vertex ids, second column == first in 1-D
    phi: np.ndarray  # (nq, 2) trace basis values
    s: np.ndarray  # boundary parameter
    weight: np.ndarray  # quadrature weight times arc-length density


def facet_quadrature(mesh: DomainMesh, facet_ids, breakpoints=()) -> FacetQuadrature:
    facet_ids = np.asarray(facet_ids, dtype=int)
    if mesh.dim == 1:
        ids = mesh.facets[facet_ids, 0]
        return FacetQuadrature(
            facet=facet_ids,
            nodes=np.column_stack([ids, ids]),
            phi=np.column_stack([np.ones(ids.size), np.zeros(ids.size)]),
            s=mesh.facet_param[facet_ids, 0].copy(),
            weight=np.ones(ids.size),
        )
    spec = mesh.spec
    bp_s = np.sort(np.asarray(breakpoints, dtype=float) * TWO_PI)
    fac, sa_all, sb_all, ca, cb = [], [], [], [], []
    for f in facet_ids:
        sa, sb = mesh.facet_param[f]
        cuts = [sa]
        if bp_s.size:
            # breakpoints are periodic; shift them into (sa, sb)
            for shift in (-TWO_PI, 0.0, TWO_PI):
                inside = bp_s + shift
                cuts.extend(inside[(inside > sa + 1e-14) & (inside < sb - 1e-14)])
        cuts.append(sb)
        cuts = sorted(cuts)
        for c, d in zip(cuts[:-1], cuts[1:]):
            fac.append(f)
            sa_all.append(sa)
            sb_all.append(sb)
            ca.append(c)
            cb.append(d)
    fac = np.asarray(fac)
    sa_all, sb_all = np.asarray(sa_all), np.asarray(sb_all)
    ca, cb = np.asarray(ca), np.asarray(cb)
    s = 0.5 * (ca + cb)[:, None] + 0.5 * (cb - ca)[:, None] * _GAUSS_X[None, :]
    w = 0.5 * (cb - ca)[:, None] * _GAUSS_W[None, :]
    xi = (s - sa_all[:, None]) / (sb_all - sa_all)[:, None]
    dens = _density(mesh, s, mesh.facet_tag[fac][:, None] == OUTER)
    nodes = np.repeat(mesh.facets[fac], 3, axis=0)
    return FacetQuadrature(
        facet=np.repeat(fac, 3),
        nodes=nodes,
        phi=np.column_stack([(1 - xi).ravel(), xi.ravel()]),
        s=s.ravel(),
        weight=(w * dens).ravel(),
    )


def _density(mesh, s, outer_mask):
    """|d X / d s| for X = sigma(s) (+ eps h nu0 on OUTER facets)."""
    spec = mesh.spec
    speed = spec.speed(s)
    if not np.any(outer_mask) or mesh.eps == 0:
        return speed
    tau = spec.to_unit(s)
    t = mesh.eps * mesh.profile(tau)
    dt = mesh.eps * mesh.profile.derivative(tau) / spec.param_length
    off = np.sqrt((speed * (1.0 + t * spec.curvature(s))) ** 2 + dt**2)
    return np.where(outer_mask, off, speed)


def boundary_matrix(mesh: DomainMesh, facet_ids, coeff, breakpoints=()) -> sp.csr_matrix:
    """Matrix of (u, v) -> integral of coeff(s) u v over the given facets."""
    n = mesh.n_vertices
    if len(facet_ids) == 0:
        return sp.csr_matrix((n, n))
    q = facet_quadrature(mesh, facet_ids, breakpoints)
    c = np.asarray(coeff(q.s), dtype=float) * q.weight
    if mesh.dim == 1:
        m = sp.coo_matrix((c, (q.nodes[:, 0], q.nodes[:, 0])), shape=(n, n))
        return _sym(m)
    vals = (c[:, None, None] * q.phi[:, :, None] * q.phi[:, None, :]).ravel()
    rows = np.repeat(q.nodes, 2, axis=1).ravel()
    cols = np.tile(q.nodes, (1, 2)).ravel()
    return _sym(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))


def boundary_facets(mesh: DomainMesh, tag: int) -> np.ndarray:
    return np.flatnonzero(mesh.facet_tag == tag)


def _as_robin(b) -> RobinCoefficient:
    if isinstance(b, RobinCoefficient):
        return b
    return RobinCoefficient.constant(float(b))


def assemble_limit(mesh: DomainMesh, b) -> OperatorPencil:
    """Robin pencil on Omega: A = grad.grad + b u v on the boundary, M = u v."""
    if np.any(mesh.cell_region == LAYER):
        raise AssemblyError("the limit problem is assembled on a mesh of Omega only")
    robin = _as_robin(b)
    K, M = volume_forms(mesh, INTERIOR)
    spec = mesh.spec
    B = boundary_matrix(
        mesh,
        np.arange(mesh.facets.shape[0]),
        lambda s: robin(spec.to_unit(s)),
        robin.breakpoints(),
    )
    return OperatorPencil(
        A=_sym(K + B), M=M, mesh=mesh, kind="limit", beta=robin.beta, robin=robin,
        mass_interior=M,
    )


def assemble_twophase(mesh: DomainMesh, eps: float, beta: float) -> OperatorPencil:
    """Two-phase pencil on Omega_eps with conductivity eps in the layer."""
    if not eps > 0:
        raise AssemblyError(f"eps must be positive, got {eps}")
    if not beta > 0:
        raise AssemblyError(f"beta must be positive, got {beta}")
    if not np.isclose(mesh.eps, eps, rtol=1e-14, atol=0):
        raise AssemblyError(f"mesh was built for eps={mesh.eps}, not {eps}")
    K_in, M_in = volume_forms(mesh, INTERIOR)
    K_l, M_l = volume_forms(mesh, LAYER)
    # with h == 0 the layer is empty and the interface is the outer boundary
    tag = OUTER if mesh.has_layer else 0
    B = boundary_matrix(mesh, boundary_facets(mesh, tag), lambda s: np.full(np.shape(s), beta))
    return OperatorPencil(
        A=_sym(K_in + eps * K_l + B),
        M=_sym(M_in + M_l),
        mesh=mesh,
        kind="twophase",
        eps=float(eps),
        beta=float(beta),
        mass_interior=M_in,
        mass_layer=M_l,
    )


def rayleigh(pencil: OperatorPencil, w) -> float:
    w = np.asarray(w, dtype=float)
    den = float(w @ (pencil.M @ w))
    if den == 0:
        raise AssemblyError("Rayleigh quotient of a field with zero mass")
    return float(w @ (pencil.A @ w)) / den


def solve_source(pencil: OperatorPencil, f) -> np.ndarray:
    """Discrete resolvent: solve A v = M f."""
    f = np.asarray(f, dtype=float)
    try:
        lu = spla.splu(pencil.A.tocsc())
        v = lu.solve(pencil.M @ f)
    except RuntimeError as exc:
        raise SolverError(f"source problem is singular: {exc}") from exc
    if not np.all(np.isfinite(v)):
        raise SolverError("source problem produced non-finite values")
    return v


__all__ = [
    "FacetQuadrature",
    "OperatorPencil",
    "assemble_limit",
    "assemble_twophase",
    "boundary_facets",
    "boundary_matrix",
    "facet_quadrature",
    "rayleigh",
    "solve_source",
    "volume_forms",
]
