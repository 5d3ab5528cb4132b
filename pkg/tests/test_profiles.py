import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thinlayer.errors import ProfileError
from thinlayer.geometry import Disk, Ellipse, Interval
from thinlayer.profiles import (
    RobinCoefficient,
    ThicknessProfile,
    boundary_mass,
    effective_profile,
    in_admissible_class,
    invert_robin,
    make_profile,
    oscillating_profile,
    robin_coefficient,
    saturate_mass,
)

TAU = np.linspace(0, 1, 97, endpoint=False)


@pytest.mark.parametrize("beta,h,b", [(1.0, 1.0, 0.5), (1.0, 0.0, 1.0), (2.0, 0.25, 4.0 / 3.0)])
def test_robin_coefficient_values(beta, h, b):
    r = robin_coefficient(ThicknessProfile.constant(h), beta)
    assert np.allclose(r(TAU), b, rtol=1e-15)


def test_robin_needs_positive_beta():
    with pytest.raises(ProfileError):
        robin_coefficient(ThicknessProfile.constant(0.1), 0.0)


def test_negative_thickness_rejected():
    with pytest.raises(ProfileError):
        ThicknessProfile.piecewise([0.1, -0.2])


def test_boundary_mass_examples():
    assert boundary_mass(ThicknessProfile.constant(0.5), Disk(1.0)) == pytest.approx(math.pi, rel=1e-14)
    assert boundary_mass(ThicknessProfile.piecewise([0.2, 0.3]), Interval(1.0)) == pytest.approx(0.5)
    pw = ThicknessProfile.piecewise([1, 2, 3, 4])
    assert boundary_mass(pw, Disk(1.0)) == pytest.approx(5 * math.pi, rel=1e-14)


def test_trig_mass_on_ellipse_matches_dense_quadrature():
    h = ThicknessProfile.trig((0.5, 0.1), (0.05,))
    e = Ellipse(2.0, 1.0)
    s = np.linspace(0, 2 * np.pi, 200001)
    f = h(e.to_unit(s)) * e.speed(s)
    ref = np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(s))
    assert boundary_mass(h, e) == pytest.approx(ref, rel=1e-9)


def test_saturate_examples():
    d = Disk(1.0)
    h = saturate_mass(ThicknessProfile.constant(0.5), 2 * math.pi, d)
    assert h.values[0] == pytest.approx(1.0, rel=1e-14)
    again = saturate_mass(h, 2 * math.pi, d)
    assert np.allclose(again.values, h.values, rtol=1e-14)
    pw = saturate_mass(ThicknessProfile.piecewise([1, 3]), 2 * math.pi, d)
    assert np.allclose(pw.values, [0.5, 1.5], rtol=1e-14)


def test_saturate_zero_profile_fails():
    with pytest.raises(ProfileError):
        saturate_mass(ThicknessProfile.constant(0.0), 1.0, Disk(1.0))


def test_effective_profile_examples():
    assert effective_profile(0.7, 0.7, 1.0).values[0] == pytest.approx(0.7, rel=1e-14)
    assert effective_profile(0.0, 1.0, 1.0).values[0] == pytest.approx(1 / 3, rel=1e-14)
    assert effective_profile(0.5, 1.5, 2.0).values[0] == pytest.approx(5 / 6, rel=1e-14)


def test_oscillating_profile_alternates_on_2k_arcs():
    h = oscillating_profile(0.0, 1.0, 4)
    assert h.n_arcs == 8
    mids = (np.arange(8) + 0.5) / 8
    assert np.array_equal(h(mids), [0, 1] * 4)


def test_oscillating_profile_requires_even_k():
    with pytest.raises(ProfileError):
        oscillating_profile(0.0, 1.0, 3)


def test_oscillating_mass_independent_of_k():
    d = Disk(1.0)
    ref = boundary_mass(ThicknessProfile.constant(0.5), d)
    for k in (2, 4, 8, 16):
        assert boundary_mass(oscillating_profile(0.0, 1.0, k), d) == pytest.approx(ref, rel=1e-13)


def test_admissible_class_tolerance():
    d = Disk(1.0)
    h = ThicknessProfile.constant(0.5)
    assert in_admissible_class(h, math.pi, d)
    assert in_admissible_class(h, math.pi - 5e-11, d)
    assert not in_admissible_class(h, math.pi - 1e-9, d)


def test_piecewise_breakpoints_and_lipschitz():
    h = ThicknessProfile.piecewise([1.0, 2.0, 3.0])
    assert np.allclose(h.breakpoints(), [0, 1 / 3, 2 / 3])
    assert h.lip == math.inf
    assert ThicknessProfile.piecewise([2.0, 2.0]).lip == 0


def test_trig_derivative_matches_finite_difference():
    h = ThicknessProfile.trig((0.5, 0.1, 0.02), (0.03, 0.01))
    d = 1e-6
    fd = (h(TAU + d) - h(TAU - d)) / (2 * d)
    assert np.allclose(h.derivative(TAU), fd, atol=1e-7)
    assert np.max(np.abs(h.derivative(TAU))) <= h.lip


def test_make_profile_dispatch():
    assert make_profile("constant", [0.2]).kind == "constant"
    assert make_profile("PiecewiseConstant", [0.2, 0.1]).kind == "piecewise"
    assert make_profile("trig", cos_coeffs=[0.3]).kind == "trig"
    with pytest.raises(ProfileError):
        make_profile("spline", [1.0])


def test_constant_robin_admits_zero_for_testing():
    assert RobinCoefficient.constant(0.0)(TAU).max() == 0.0
    with pytest.raises(ProfileError):
        RobinCoefficient.constant(-1.0)


@settings(max_examples=50, deadline=None)
@given(
    beta=st.floats(0.1, 10.0),
    v1=st.lists(st.floats(0.0, 5.0), min_size=1, max_size=8),
    bump=st.floats(0.0, 3.0),
)
def test_monotone_transform_and_round_trip(beta, v1, bump):
    h1 = ThicknessProfile.piecewise(v1)
    h2 = ThicknessProfile.piecewise([x + bump for x in v1])
    b1 = robin_coefficient(h1, beta)(TAU)
    b2 = robin_coefficient(h2, beta)(TAU)
    assert np.all(b1 >= b2)
    assert np.all((b1 > 0) & (b1 <= beta))
    assert np.allclose(invert_robin(b1, beta), h1(TAU), atol=1e-12 * (1 + max(v1)) * (1 + beta))


@settings(max_examples=30, deadline=None)
@given(vals=st.lists(st.floats(0.01, 3.0), min_size=1, max_size=6), m=st.floats(0.1, 20.0))
def test_robin_inverse_integral_bound(vals, m):
    # int 1/b <= P/beta + m for h in H_m
    d = Disk(1.0)
    beta = 1.5
    h = saturate_mass(ThicknessProfile.piecewise(vals), m, d)
    b = robin_coefficient(h, beta)
    s = (np.arange(len(vals) * 64) + 0.5) / (len(vals) * 64)
    integral = np.mean(1.0 / b(s)) * 2 * np.pi
    assert integral <= 2 * np.pi / beta + m + 1e-9
