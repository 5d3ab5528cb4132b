import numpy as np
import pytest
import scipy.sparse as sp

from thinlayer.assembly import (
    assemble_limit,
    assemble_twophase,
    rayleigh,
    solve_source,
)
from thinlayer.eigensolve import solve_pencil
from thinlayer.errors import AssemblyError
from thinlayer.geometry import Disk, Ellipse, Interval, build_mesh
from thinlayer.oracles import disk_limit_spectrum, interval_limit_spectrum, values
from thinlayer.profiles import RobinCoefficient, ThicknessProfile, robin_coefficient

CONST = ThicknessProfile.constant


def _max_asym(m):
    d = (m - m.T).tocoo()
    return 0.0 if d.nnz == 0 else np.abs(d.data).max()


def test_exact_symmetry_and_definiteness():
    mesh = build_mesh(Ellipse(1.3, 0.8), CONST(0.4), 0.05, 0.08)
    p = assemble_twophase(mesh, 0.05, 2.0)
    assert _max_asym(p.A) == 0.0
    assert _max_asym(p.M) == 0.0
    rng = np.random.default_rng(1)
    x = rng.standard_normal((mesh.n_vertices, 5))
    assert np.all(np.einsum("ij,ij->j", x, p.M @ x) > 0)
    assert np.all(np.einsum("ij,ij->j", x, p.A @ x) >= 0)


def test_limit_constant_field_energy_and_mass():
    mesh = build_mesh(Disk(1.0), CONST(1.0), 0.0, 0.02)
    p = assemble_limit(mesh, robin_coefficient(CONST(1.0), 1.0))
    one = np.ones(mesh.n_vertices)
    assert one @ (p.A @ one) == pytest.approx(np.pi, rel=1e-6)
    assert one @ (p.M @ one) == pytest.approx(np.pi, abs=1e-3)


def test_limit_rejects_layer_meshes():
    mesh = build_mesh(Disk(1.0), CONST(0.5), 0.05, 0.2)
    with pytest.raises(AssemblyError):
        assemble_limit(mesh, 0.5)


def test_interval_limit_ground_state_matches_oracle():
    mesh = build_mesh(Interval(np.pi), CONST(0.0), 0.0, np.pi / 1e4)
    p = assemble_limit(mesh, RobinCoefficient.constant(1.0))
    lam = solve_pencil(p, 1).eigenvalues[0]
    ref = interval_limit_spectrum(np.pi, 1.0, 1.0, 1)[0]
    assert lam == pytest.approx(ref, rel=1e-8)


def test_twophase_constant_field_outer_perimeter():
    eps, h, beta = 0.1, 0.5, 2.0
    mesh = build_mesh(Disk(1.0), CONST(h), eps, 0.05)
    p = assemble_twophase(mesh, eps, beta)
    one = np.ones(mesh.n_vertices)
    assert one @ (p.A @ one) == pytest.approx(beta * 2 * np.pi * (1 + eps * h), rel=1e-10)


def test_twophase_rejects_nonpositive_eps():
    mesh = build_mesh(Disk(1.0), CONST(0.5), 0.05, 0.2)
    with pytest.raises(AssemblyError):
        assemble_twophase(mesh, 0.0, 1.0)
    with pytest.raises(AssemblyError):
        assemble_twophase(mesh, 0.1, 1.0)


def test_eps_one_without_layer_is_plain_robin():
    mesh = build_mesh(Interval(1.0), CONST(0.0), 1.0, 1e-3)
    two = solve_pencil(assemble_twophase(mesh, 1.0, 1.5), 6).eigenvalues
    lim = solve_pencil(assemble_limit(mesh, RobinCoefficient.constant(1.5)), 6).eigenvalues
    assert np.allclose(two, lim, rtol=1e-10)


@pytest.mark.parametrize("spec", [Interval(1.0), Disk(1.0)])
def test_eps_one_equals_limit_on_enlarged_domain(spec):
    mesh = build_mesh(spec, CONST(0.3), 1.0, 0.05)
    two = assemble_twophase(mesh, 1.0, 1.7)
    single = mesh.single_phase()
    from thinlayer.assembly import boundary_matrix, volume_forms
    from thinlayer.geometry import INTERIOR

    K, M = volume_forms(single, INTERIOR)
    B = boundary_matrix(single, np.arange(single.facets.shape[0]), lambda s: np.full(np.shape(s), 1.7))
    assert abs(two.A - (K + B)).max() <= 1e-12
    assert abs(two.M - M).max() <= 1e-12


def test_rayleigh_properties():
    mesh = build_mesh(Disk(1.0), CONST(0.3), 0.0, 0.08)
    p = assemble_limit(mesh, robin_coefficient(CONST(0.3), 1.0))
    s = solve_pencil(p, 3)
    for i in range(3):
        u = s.eigenvectors[:, i]
        assert rayleigh(p, u) == pytest.approx(s.eigenvalues[i], rel=1e-12)
        assert rayleigh(p, 7 * u) == pytest.approx(rayleigh(p, u), rel=1e-12)
    one = np.ones(mesh.n_vertices)
    b = 1 / 1.3
    area = one @ (p.M @ one)
    assert rayleigh(p, one) == pytest.approx(b * 2 * np.pi / area, rel=1e-10)
    with pytest.raises(AssemblyError):
        rayleigh(p, np.zeros(mesh.n_vertices))


def test_solve_source_closed_form_interval():
    # -v'' = 1, -v'(0) + v(0) = 0, v'(1) + v(1) = 0  =>  v = (1 + x - x^2) / 2
    mesh = build_mesh(Interval(1.0), CONST(0.0), 0.0, 1e-3)
    p = assemble_limit(mesh, RobinCoefficient.constant(1.0))
    v = solve_source(p, np.ones(mesh.n_vertices))
    x = mesh.vertices[:, 0]
    assert np.allclose(v, 0.5 * (1 + x - x * x), atol=1e-8)
    assert np.array_equal(solve_source(p, np.zeros(mesh.n_vertices)), np.zeros(mesh.n_vertices))


def test_solve_source_consistency():
    mesh = build_mesh(Disk(1.0), CONST(0.3), 0.0, 0.08)
    p = assemble_limit(mesh, 0.8)
    u = np.cos(mesh.vertices[:, 0]) + mesh.vertices[:, 1] ** 2
    f = sp.linalg.spsolve(p.M.tocsc(), p.A @ u)
    assert np.allclose(solve_source(p, f), u, atol=1e-10)


def _order(errors, hs):
    return np.log(errors[:-1] / errors[1:]) / np.log(hs[:-1] / hs[1:])


def test_interval_mesh_convergence_order_two():
    ref = interval_limit_spectrum(1.0, 0.8, 0.8, 3)
    hs = np.array([0.04, 0.02, 0.01])
    errs = []
    for h in hs:
        mesh = build_mesh(Interval(1.0), CONST(0.0), 0.0, h)
        lam = solve_pencil(assemble_limit(mesh, 0.8), 3).eigenvalues
        errs.append(np.abs(lam - ref).max())
    assert np.all(_order(np.array(errs), hs) >= 1.9)


def test_disk_mesh_convergence_order_two():
    b = 1 / 1.5
    ref = values(disk_limit_spectrum(1.0, b, 2, 2))[:3]
    hs = np.array([0.08, 0.04, 0.02])
    errs = []
    for h in hs:
        mesh = build_mesh(Disk(1.0), CONST(0.5), 0.0, h)
        lam = solve_pencil(assemble_limit(mesh, b), 3).eigenvalues
        errs.append(np.abs(lam - ref).max())
    assert np.all(_order(np.array(errs), hs) >= 1.9)
