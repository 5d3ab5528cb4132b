import numpy as np
import pytest
from scipy import special

from thinlayer.errors import OracleError
from thinlayer.oracles.bessel import j_with_derivative, jv, jy_with_derivatives, yv

X = np.concatenate([np.linspace(1e-3, 2.0, 60), np.linspace(2.0, 60.0, 200), [150.0, 600.0, 999.0]])


@pytest.mark.parametrize("m", [0, 1, 2, 5, 12, 40])
def test_j_against_reference(m):
    ref = special.jv(m, X)
    assert np.allclose(jv(m, X), ref, rtol=1e-12, atol=1e-13 * np.abs(ref).max())


@pytest.mark.parametrize("m", [0, 1, 3, 8])
def test_y_against_reference(m):
    x = X[X > 0.05]
    ref = special.yv(m, x)
    assert np.allclose(yv(m, x), ref, rtol=1e-11, atol=1e-13)


@pytest.mark.parametrize("m", [0, 1, 2, 7, 20])
def test_wronskian(m):
    x = np.linspace(0.1, 200.0, 997)
    j, jd, y, yd = jy_with_derivatives(m, x)
    w = j * yd - jd * y
    assert np.max(np.abs(w * np.pi * x / 2 - 1)) < 1e-10


def test_derivative_paths_agree():
    for m in (0, 1, 4):
        j1, jd1 = j_with_derivative(m, X)
        j2, jd2, _, _ = jy_with_derivatives(m, X)
        assert np.allclose(j1, j2, rtol=1e-12, atol=1e-15)
        assert np.allclose(jd1, jd2, rtol=1e-12, atol=1e-14)
        assert np.allclose(jd1, special.jvp(m, X), rtol=1e-11, atol=1e-13)


def test_known_zeros():
    assert jv(0, 2.404825557695773) == pytest.approx(0.0, abs=1e-14)
    assert j_with_derivative(1, 1.8411837813406593)[1] == pytest.approx(0.0, abs=1e-14)


def test_shape_preserved():
    assert jv(0, 1.0).shape == ()
    assert yv(1, np.ones((2, 3))).shape == (2, 3)


@pytest.mark.parametrize("m,x", [(-1, 1.0), (101, 1.0), (0, 0.0), (0, -1.0), (0, 1001.0), (0, np.nan)])
def test_range_errors(m, x):
    with pytest.raises(OracleError):
        jv(m, x)
