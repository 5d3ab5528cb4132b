import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from thinlayer.errors import OracleError
from thinlayer.oracles import (
    DiskMode,
    IntervalLimitMode,
    IntervalTwoPhaseMode,
    disk_limit_spectrum,
    disk_trace_ratio,
    disk_twophase_spectrum,
    interval_limit_spectrum,
    interval_twophase_spectrum,
    values,
)


def test_interval_neumann():
    assert np.allclose(interval_limit_spectrum(np.pi, 0.0, 0.0, 5), [0, 1, 4, 9, 16], atol=1e-13)


def test_interval_dirichlet_proxy():
    lam = interval_limit_spectrum(np.pi, 1e8, 1e8, 4)
    assert np.allclose(lam, [1, 4, 9, 16], rtol=1e-6)


def test_interval_against_finite_differences():
    # lumped P1 / vertex FD with Robin ends, symmetrised, 1e5 points
    n = 100_000
    dx = 1.0 / (n - 1)
    b = 1.0
    w = np.full(n, dx)
    w[[0, -1]] = dx / 2
    diag = np.full(n, 2 / dx)
    diag[[0, -1]] = 1 / dx + b
    off = np.full(n - 1, -1 / dx)
    s = 1 / np.sqrt(w)
    T = sp.diags([off * s[:-1] * s[1:], diag * s * s, off * s[:-1] * s[1:]], [-1, 0, 1], format="csc")
    lam_fd = spla.eigsh(T, k=1, sigma=0.0, which="LM")[0][0]
    lam = interval_limit_spectrum(1.0, b, b, 1)[0]
    assert lam == pytest.approx(lam_fd, rel=1e-8)


def test_interval_limit_bad_input():
    with pytest.raises(OracleError):
        interval_limit_spectrum(1.0, -1.0, 0.0, 1)


def test_interval_twophase_eps_one_degenerates():
    L, h, beta = 1.0, 0.3, 1.7
    two = interval_twophase_spectrum(L, 1.0, h, h, beta, 6)
    lim = interval_limit_spectrum(L + 2 * h, beta, beta, 6)
    assert np.allclose(two, lim, rtol=1e-12)


def test_interval_twophase_converges_linearly():
    L, h, beta = 1.0, 0.3, 1.0
    lim = interval_limit_spectrum(L, beta / (1 + beta * h), beta / (1 + beta * h), 3)
    eps = np.array([1e-1, 1e-2, 1e-3, 1e-4])
    ratio = np.array([np.abs(interval_twophase_spectrum(L, e, h, h, beta, 3) - lim) for e in eps]) / eps[:, None]
    # |lam_eps - lam| / eps stays bounded (and settles) for each index
    assert np.all(ratio.max(axis=0) <= 1.1 * ratio.min(axis=0))


def test_interval_slope_matches_quotient():
    # H = 0: Q = -lam * c2(h) * (v(0)^2 + v(L)^2) / ||v||^2
    L, h, beta = 1.0, 0.3, 1.0
    b = beta / (1 + beta * h)
    lam = interval_limit_spectrum(L, b, b, 1)[0]
    mode = IntervalLimitMode(L, b, b, lam)
    c2 = h * (3 + 3 * beta * h + (beta * h) ** 2) / (3 * (1 + beta * h) ** 2)
    q = -lam * c2 * sum(t * t for t in mode.traces()) / mode.norm_sq()
    eps = np.array([4e-4, 2e-4, 1e-4])
    d = np.array([interval_twophase_spectrum(L, e, h, h, beta, 1)[0] for e in eps]) - lam
    s = np.polyfit(eps, d, 2)[1]
    assert s == pytest.approx(q, rel=1e-3)


def test_interval_twophase_mode_is_continuous_and_normalised():
    L, eps, h, beta = 1.0, 0.1, 0.3, 1.0
    lam = interval_twophase_spectrum(L, eps, h, h, beta, 2)[1]
    u = IntervalTwoPhaseMode(L, eps, h, h, beta, lam)
    for x in (0.0, L):
        assert u(np.array([x - 1e-13]))[0] == pytest.approx(u(np.array([x + 1e-13]))[0], abs=1e-9)
    assert u.layer_mass() + u.interior_norm_sq() == pytest.approx(1.0, rel=1e-12)
    x = np.linspace(-eps * h, L + eps * h, 200_001)
    f = u(x) ** 2
    assert np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(x)) == pytest.approx(1.0, rel=1e-8)
    with pytest.raises(OracleError):
        u(np.array([L + 1.0]))


def test_interlacing_in_b():
    prev = None
    for b in (0.1, 0.5, 1.0, 2.0, 5.0):
        lam = interval_limit_spectrum(1.0, b, b, 5)
        disk = values(disk_limit_spectrum(1.0, b, 3, 2))[:6]
        if prev is not None:
            assert np.all(lam > prev[0])
            assert np.all(disk > prev[1])
        prev = (lam, disk)


def test_disk_dirichlet_and_neumann_proxies():
    assert values(disk_limit_spectrum(1.0, 1e8, 0, 1))[0] == pytest.approx(2.404825557695773**2, rel=1e-6)
    lam = values(disk_limit_spectrum(1.0, 1e-9, 2, 2))
    assert lam[0] == pytest.approx(0.0, abs=1e-8)
    assert lam[1] == pytest.approx(1.8411837813406593**2, rel=1e-8)


def test_disk_double_listing():
    modes = disk_limit_spectrum(1.0, 0.8, 4, 3)
    for md in modes:
        count = sum(1 for o in modes if (o.m, o.n) == (md.m, md.n))
        assert count == (1 if md.m == 0 else 2)
    assert [md.value for md in modes] == sorted(md.value for md in modes)
    assert isinstance(modes[0], DiskMode)


def test_disk_twophase_eps_one_degenerates():
    R, h, beta = 1.0, 0.4, 1.3
    two = values(disk_twophase_spectrum(R, 1.0, h, beta, 4, 3))
    lim = values(disk_limit_spectrum(R + h, beta, 4, 3))
    assert np.allclose(two, lim, rtol=1e-10)


def test_disk_twophase_converges():
    R, h, beta = 1.0, 0.5, 1.0
    lim = values(disk_limit_spectrum(R, beta / (1 + beta * h), 2, 2))[:5]
    errs = [np.abs(values(disk_twophase_spectrum(R, e, h, beta, 2, 2))[:5] - lim).max() for e in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]
    # first order: each tenfold decrease of eps cuts the error tenfold
    assert errs[1] / errs[0] == pytest.approx(0.1, rel=0.02)
    assert errs[2] / errs[1] == pytest.approx(0.1, rel=0.02)


def test_disk_twophase_rejects_thick_layer():
    with pytest.raises(OracleError):
        disk_twophase_spectrum(1.0, 0.5, 2.0, 1.0, 1, 1)


def test_disk_trace_ratio_closed_form():
    # J_0(w r): compare with direct quadrature
    lam = values(disk_limit_spectrum(1.0, 0.7, 0, 1))[0]
    from scipy import special

    w = math.sqrt(lam)
    r = np.linspace(0, 1, 100_001)
    f = r * special.jv(0, w * r) ** 2
    interior = 2 * np.pi * np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(r))
    boundary = 2 * np.pi * special.jv(0, w) ** 2
    assert disk_trace_ratio(1.0, 0, lam) == pytest.approx(boundary / interior, rel=1e-8)
