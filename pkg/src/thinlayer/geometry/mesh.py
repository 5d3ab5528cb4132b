"""Tagged simplicial meshes of Omega and of Omega_eps = closure(Omega) + layer.

Closed boundaries are meshed by concentric rings in the star-shaped
coordinate ``rho * point(s)``. Ring vertex counts are multiples of 8 and the
ring-to-ring strips are triangulated with exact integer angle comparisons,
so a disk mesh is invariant under rotation by pi/4. The layer is a
structured extrusion of the boundary polygon along the analytic normal with
``n_t`` levels; every interface facet is shared by one interior and one
layer cell.

Vertex numbering: the vertices of Omega come first (``n_interior``), layer
vertices follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import GeometryError, MeshError, ProfileError
from .curves import TWO_PI, BoundarySpec, Interval, arcs

INTERIOR, LAYER = 0, 1
INTERFACE, OUTER = 0, 1

_QUALITY_MIN = 0.1
_EMBED_SAMPLES = 4096


@dataclass(frozen=True)
class EmbeddingReport:
    ok: bool
    d0: float
    eps_sup_h: float
    violating_arcs: list

    def __bool__(self):
        return self.ok


def validate_embedding(spec: BoundarySpec, h, eps: float) -> EmbeddingReport:
    """Check eps * sup h against the largest admissible exterior offset d0.

    d0 is +inf when the boundary is convex, otherwise 1/|min kappa| from the
    sign test 1 + t kappa > 0 on concave arcs.
    """
    t_max = eps * h.sup
    if isinstance(spec, Interval):
        return EmbeddingReport(True, math.inf, t_max, [])
    s = np.arange(_EMBED_SAMPLES) * (TWO_PI / _EMBED_SAMPLES)
    kappa = spec.curvature(s)
    kmin = float(kappa.min())
    d0 = math.inf if kmin >= 0 else 1.0 / -kmin
    bad = 1.0 + t_max * kappa <= 0
    return EmbeddingReport(bool(t_max < d0), d0, t_max, arcs(bad, s))


@dataclass(frozen=True, eq=False)
class DomainMesh:
    spec: BoundarySpec
    profile: object
    eps: float
    n_t: int
    vertices: np.ndarray
    cells: np.ndarray
    cell_region: np.ndarray
    facets: np.ndarray
    facet_tag: np.ndarray
    facet_param: np.ndarray
    facet_H: np.ndarray
    facet_h: np.ndarray
    n_interior: int
    boundary_vertices: np.ndarray
    boundary_params: np.ndarray
    layer_index: np.ndarray | None

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def has_layer(self) -> bool:
        return self.layer_index is not None

    def cell_measures(self) -> np.ndarray:
        v = self.vertices
        c = self.cells
        if self.dim == 1:
            return np.abs(v[c[:, 1], 0] - v[c[:, 0], 0])
        e1 = v[c[:, 1]] - v[c[:, 0]]
        e2 = v[c[:, 2]] - v[c[:, 0]]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def region_measure(self, region: int) -> float:
        return float(self.cell_measures()[self.cell_region == region].sum())

    def fiber_coordinate(self) -> np.ndarray:
        """Normal distance ``t`` of each vertex from the interface (0 inside Omega)."""
        t = np.zeros(self.n_vertices)
        if not self.has_layer:
            return t
        s = self.boundary_params
        depth = self.eps * np.asarray(self.profile(self.spec.to_unit(s)), dtype=float)
        for lev in range(1, self.n_t + 1):
            t[self.layer_index[:, lev]] = depth * lev / self.n_t
        return t

    def single_phase(self) -> "DomainMesh":
        """Same vertices and cells with every cell tagged INTERIOR.

        The OUTER facets become the only boundary facets; used to compare a
        two-phase assembly at eps = 1 with a plain Robin assembly on Omega_eps.
        """
        keep = self.facet_tag == OUTER
        return DomainMesh(
            spec=self.spec,
            profile=self.profile,
            eps=self.eps,
            n_t=self.n_t,
            vertices=self.vertices,
            cells=self.cells,
            cell_region=np.zeros_like(self.cell_region),
            facets=self.facets[keep],
            facet_tag=np.full(int(keep.sum()), OUTER, dtype=np.int8),
            facet_param=self.facet_param[keep],
            facet_H=self.facet_H[keep],
            facet_h=self.facet_h[keep],
            n_interior=self.n_vertices,
            boundary_vertices=self.layer_index[:, -1],
            boundary_params=self.boundary_params,
            layer_index=None,
        )


def _n_cells(length: float, resolution: float) -> int:
    return max(1, int(math.ceil(length / resolution - 1e-9)))


def build_mesh(spec: BoundarySpec, h, eps: float, resolution: float, n_t: int = 4) -> DomainMesh:
    """Mesh Omega (eps = 0) or Omega_eps (eps > 0) with region and facet tags."""
    if not resolution > 0:
        raise MeshError(f"resolution must be positive, got {resolution}")
    if eps < 0:
        raise MeshError(f"eps must be non-negative, got {eps}")
    # h == 0 gives an empty layer: Omega_eps = closure(Omega)
    layered = eps > 0 and h.sup > 0
    if layered:
        if n_t < 4:
            raise MeshError(f"the layer needs at least 4 cell levels, got n_t={n_t}")
        if h.h_min <= 0:
            raise ProfileError("two-phase meshes need a strictly positive thickness")
        if spec.dim == 2 and not h.is_continuous:
            raise ProfileError("two-phase meshes need a Lipschitz thickness profile")
        report = validate_embedding(spec, h, eps)
        if not report.ok:
            raise MeshError(
                f"layer self-intersects: eps*sup h = {report.eps_sup_h:.4g} >= d0 = "
                f"{report.d0:.4g} on arcs {report.violating_arcs}"
            )
    build = _build_interval if isinstance(spec, Interval) else _build_planar
    return build(spec, h, eps, layered, resolution, n_t)


def _build_interval(spec, h, eps, layered, resolution, n_t):
    n = _n_cells(spec.L, resolution)
    x = np.linspace(0.0, spec.L, n + 1)
    cells = [np.column_stack([np.arange(n), np.arange(1, n + 1)])]
    verts = [x]
    facets = [[0], [n]]
    tags = [INTERFACE, INTERFACE]
    params = [[0.0], [spec.L]]
    h0, hL = (float(v) for v in h(np.array([0.0, 1.0])))
    layer_index = None
    if layered:
        nxt = n + 1
        layer_index = np.zeros((2, n_t + 1), dtype=int)
        layer_index[0, 0], layer_index[1, 0] = 0, n
        for side, (base, sign, depth) in enumerate(((0.0, -1.0, h0), (spec.L, 1.0, hL))):
            t = eps * depth * np.arange(1, n_t + 1) / n_t
            ids = nxt + np.arange(n_t)
            verts.append(base + sign * t)
            layer_index[side, 1:] = ids
            chain = layer_index[side]
            cells.append(np.column_stack([chain[:-1], chain[1:]]))
            nxt += n_t
        facets += [[layer_index[0, -1]], [layer_index[1, -1]]]
        tags += [OUTER, OUTER]
        params += [[0.0], [spec.L]]
    vertices = np.concatenate(verts)[:, None]
    cells = np.concatenate(cells)
    region = np.full(cells.shape[0], LAYER, dtype=np.int8)
    region[:n] = INTERIOR
    # orient 1-D cells left to right
    flip = vertices[cells[:, 0], 0] > vertices[cells[:, 1], 0]
    cells[flip] = cells[flip][:, ::-1]
    facet_param = np.asarray(params, dtype=float)
    return DomainMesh(
        spec=spec,
        profile=h,
        eps=float(eps),
        n_t=int(n_t),
        vertices=vertices,
        cells=cells,
        cell_region=region,
        facets=np.asarray(facets, dtype=int),
        facet_tag=np.asarray(tags, dtype=np.int8),
        facet_param=facet_param,
        facet_H=np.zeros(len(facets)),
        facet_h=np.asarray(h(spec.to_unit(facet_param[:, 0])), dtype=float),
        n_interior=n + 1,
        boundary_vertices=np.array([0, n]),
        boundary_params=np.array([0.0, spec.L]),
        layer_index=layer_index,
    )


def _ring_counts(spec, resolution):
    n_r = max(2, _n_cells(spec.max_radius(), resolution))
    perim = spec.perimeter()
    counts = [1]
    for i in range(1, n_r + 1):
        c = (i / n_r) * perim / resolution
        counts.append(8 * max(1, int(round(c / 8))))
    # rings must not shrink outward
    for i in range(2, n_r + 1):
        counts[i] = max(counts[i], counts[i - 1])
    return n_r, counts


def _strip(inner_ids, n_in, sh_in, outer_ids, n_out, sh_out):
    """Triangulate the strip between two rings.

    Angles are (2k + sh) / (2n) in units of a full turn; comparisons use
    integer cross-multiplication so the result is exactly periodic.
    """
    ev = []
    i = j = 0
    while i < n_in or j < n_out:
        if j >= n_out or (i < n_in and (2 * i + sh_in) * n_out <= (2 * j + sh_out) * n_in):
            ev.append((0, i))
            i += 1
        else:
            ev.append((1, j))
            j += 1
    tris = []
    ci, co = n_in - 1, n_out - 1
    for kind, k in ev:
        if kind == 0:
            tris.append((inner_ids[ci], inner_ids[k], outer_ids[co]))
            ci = k
        else:
            tris.append((inner_ids[ci], outer_ids[co], outer_ids[k]))
            co = k
    return tris


def _orient(vertices, cells):
    e1 = vertices[cells[:, 1]] - vertices[cells[:, 0]]
    e2 = vertices[cells[:, 2]] - vertices[cells[:, 0]]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    cells = cells.copy()
    neg = det < 0
    cells[neg] = cells[neg][:, [0, 2, 1]]
    return cells, np.abs(det)


def _quality(vertices, cells, det):
    v = vertices
    l2 = (
        np.sum((v[cells[:, 1]] - v[cells[:, 0]]) ** 2, axis=1)
        + np.sum((v[cells[:, 2]] - v[cells[:, 1]]) ** 2, axis=1)
        + np.sum((v[cells[:, 0]] - v[cells[:, 2]]) ** 2, axis=1)
    )
    # 1 for an equilateral triangle
    return 2.0 * math.sqrt(3.0) * det / l2


def _build_planar(spec, h, eps, layered, resolution, n_t):
    n_r, counts = _ring_counts(spec, resolution)
    shifts = [0] + [(n_r - i) % 2 for i in range(1, n_r + 1)]
    pts = [np.zeros((1, 2))]
    ring_ids = [np.array([0])]
    nxt = 1
    for i in range(1, n_r + 1):
        n = counts[i]
        s = TWO_PI * (2 * np.arange(n) + shifts[i]) / (2 * n)
        if i == n_r:
            p = spec.point(s)
        else:
            p = (i / n_r) * spec.point(s)
        pts.append(p)
        ring_ids.append(nxt + np.arange(n))
        nxt += n
    tris = [(0, ring_ids[1][k], ring_ids[1][(k + 1) % counts[1]]) for k in range(counts[1])]
    for i in range(1, n_r):
        tris += _strip(ring_ids[i], counts[i], shifts[i], ring_ids[i + 1], counts[i + 1], shifts[i + 1])
    vertices = np.concatenate(pts)
    n_int = vertices.shape[0]
    cells = np.asarray(tris, dtype=int)
    cells, det = _orient(vertices, cells)
    q = _quality(vertices, cells, det)
    if q.min() < _QUALITY_MIN:
        raise MeshError(f"degenerate interior cell (quality {q.min():.3g} < {_QUALITY_MIN})")

    nb = counts[n_r]
    bverts = ring_ids[n_r]
    bparams = TWO_PI * np.arange(nb) / nb
    nxt_b = np.roll(np.arange(nb), -1)
    facets = [np.column_stack([bverts, bverts[nxt_b]])]
    fparam = [np.column_stack([bparams, bparams + TWO_PI / nb])]
    ftag = [np.full(nb, INTERFACE, dtype=np.int8)]
    region = [np.full(cells.shape[0], INTERIOR, dtype=np.int8)]
    layer_index = None
    if layered:
        tau = spec.to_unit(bparams)
        depth = eps * np.asarray(h(tau), dtype=float)
        base = spec.point(bparams)
        nu = spec.normal(bparams)
        layer_index = np.zeros((nb, n_t + 1), dtype=int)
        layer_index[:, 0] = bverts
        new = []
        for lev in range(1, n_t + 1):
            layer_index[:, lev] = n_int + (lev - 1) * nb + np.arange(nb)
            new.append(base + (depth * lev / n_t)[:, None] * nu)
        vertices = np.concatenate([vertices] + new)
        lc = []
        for lev in range(n_t):
            a, b = layer_index[:, lev], layer_index[nxt_b, lev]
            c, d = layer_index[nxt_b, lev + 1], layer_index[:, lev + 1]
            lc.append(np.column_stack([a, b, c]))
            lc.append(np.column_stack([a, c, d]))
        lcells, ldet = _orient(vertices, np.concatenate(lc))
        if ldet.min() <= 0:
            raise MeshError("degenerate layer cell")
        cells = np.concatenate([cells, lcells])
        region.append(np.full(lcells.shape[0], LAYER, dtype=np.int8))
        outer = layer_index[:, -1]
        facets.append(np.column_stack([outer, outer[nxt_b]]))
        fparam.append(fparam[0].copy())
        ftag.append(np.full(nb, OUTER, dtype=np.int8))
    facet_param = np.concatenate(fparam)
    mid = facet_param.mean(axis=1)
    return DomainMesh(
        spec=spec,
        profile=h,
        eps=float(eps),
        n_t=int(n_t),
        vertices=vertices,
        cells=cells,
        cell_region=np.concatenate(region),
        facets=np.concatenate(facets),
        facet_tag=np.concatenate(ftag),
        facet_param=facet_param,
        facet_H=spec.curvature(mid),
        facet_h=np.asarray(h(spec.to_unit(mid)), dtype=float),
        n_interior=n_int,
        boundary_vertices=bverts,
        boundary_params=bparams,
        layer_index=layer_index,
    )


def fiber_sample(mesh: DomainMesh, u, s: float, n_samples: int = 16):
    """Sample a vertex field along the normal fiber through the boundary point ``s``.

    Returns arrays ``(t, values)`` at ``n_samples`` equispaced distances in
    [0, eps h(s)], interpolated element-wise in the structured layer.
    """
    if not mesh.has_layer:
        raise MeshError("fiber sampling needs a mesh with a layer (eps > 0)")
    u = np.asarray(u, dtype=float)
    spec = mesh.spec
    depth = mesh.eps * float(mesh.profile(spec.to_unit(s)))
    t = np.linspace(0.0, depth, n_samples)
    if isinstance(spec, Interval):
        side = 0 if np.isclose(s, 0.0) else 1 if np.isclose(s, spec.L) else None
        if side is None:
            raise GeometryError(f"interval fibers start at 0 or L, got s={s}")
        chain = mesh.layer_index[side]
        tv = np.abs(mesh.vertices[chain, 0] - mesh.vertices[chain[0], 0])
        return t, np.interp(t, tv, u[chain])
    nb = mesh.boundary_params.size
    ss = float(np.mod(s, TWO_PI))
    pos = ss / (TWO_PI / nb)
    i = min(int(math.floor(pos)), nb - 1)
    alpha = pos - i
    i1 = (i + 1) % nb
    z = np.clip(t / depth, 0.0, 1.0) * mesh.n_t
    lev = np.minimum(np.floor(z).astype(int), mesh.n_t - 1)
    beta = z - lev
    li = mesh.layer_index
    u00, u10 = u[li[i, lev]], u[li[i1, lev]]
    u11, u01 = u[li[i1, lev + 1]], u[li[i, lev + 1]]
    lower = u00 + alpha * (u10 - u00) + beta * (u11 - u10)
    upper = u00 + beta * (u01 - u00) + alpha * (u11 - u01)
    return t, np.where(alpha >= beta, lower, upper)
