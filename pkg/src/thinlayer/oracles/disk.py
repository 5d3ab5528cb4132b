"""Bessel dispersion relations on the disk (limit) and disk + annulus (two-phase).

Separation u = f(r) cos(m theta) reduces both problems to radial ones.
Limit: f = J_m(omega r), with omega J_m'(omega R) + b J_m(omega R) = 0.
Two-phase: f = A J_m(omega r) inside, and in the annulus R < r < R + eps h
a combination of J_m and Y_m at wavenumber omega / sqrt(eps) fixed by the
outer Robin condition; matching value and flux at r = R gives the scalar
dispersion function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import OracleError
from .bessel import X_MAX, j_with_derivative, jy_with_derivatives
from .roots import scan_roots


@dataclass(frozen=True, order=True)
class DiskMode:
    value: float
    m: int
    n: int


def _limit_dispersion(R, b, m):
    def f(omega):
        j, jd = j_with_derivative(m, omega * R)
        return omega * jd + b * j

    return f


def _twophase_dispersion(R, eps, h, beta, m):
    ro = R + eps * h
    se = math.sqrt(eps)

    def f(omega):
        omega = np.asarray(omega, dtype=float)
        k2 = omega / se
        jo, jdo, yo, ydo = jy_with_derivatives(m, k2 * ro)
        p = eps * k2 * jdo + beta * jo
        q = eps * k2 * ydo + beta * yo
        ji, jdi, yi, ydi = jy_with_derivatives(m, k2 * R)
        w = q * ji - p * yi
        dw = k2 * (q * jdi - p * ydi)
        jin, jdin = j_with_derivative(m, omega * R)
        return omega * jdin * w - eps * dw * jin

    return f


def _per_order(f_for_m, m_max, k_per_m, step, start, cap=math.inf):
    modes = []
    for m in range(m_max + 1):
        f = f_for_m(m)
        # J_m(x) has its n-th zero below m + n pi + pi; allow generous room
        stop = min((m + (k_per_m + 2) * math.pi) / start[1] + step, cap)
        om = scan_roots(f, k_per_m, start[0], step, stop)
        for n, w in enumerate(om, start=1):
            copies = 1 if m == 0 else 2
            modes.extend([DiskMode(float(w * w), m, n)] * copies)
    return sorted(modes)


def disk_limit_spectrum(R: float, b: float, m_max: int, k_per_m: int) -> list:
    """Robin eigenvalues of the disk labelled by (m, n); m >= 1 listed twice."""
    if R <= 0 or b <= 0 or m_max < 0 or k_per_m < 1:
        raise OracleError("need R > 0, b > 0, m_max >= 0, k_per_m >= 1")
    step = math.pi / (32 * R)
    return _per_order(
        lambda m: _limit_dispersion(R, b, m), m_max, k_per_m, step, (1e-6 / R, R)
    )


def disk_twophase_spectrum(R, eps, h, beta, m_max: int, k_per_m: int) -> list:
    """Two-phase eigenvalues of the coated disk labelled by (m, n)."""
    if R <= 0 or not 0 < eps <= 1 or h <= 0 or beta <= 0 or m_max < 0 or k_per_m < 1:
        raise OracleError("need R > 0, 0 < eps <= 1, h > 0, beta > 0")
    if eps * h >= R:
        raise OracleError("layer thicker than the disk radius")
    step = math.pi / (32 * (R + math.sqrt(eps) * h))
    return _per_order(
        lambda m: _twophase_dispersion(R, eps, h, beta, m), m_max, k_per_m, step, (1e-6 / R, R),
        # layer argument omega r / sqrt(eps) must stay inside the Bessel range
        cap=X_MAX * math.sqrt(eps) / (R + eps * h),
    )


def values(modes) -> np.ndarray:
    return np.array([md.value for md in modes])


def disk_trace_ratio(R: float, m: int, lam: float) -> float:
    """Boundary-to-interior L2 ratio of J_m(omega r) cos(m theta).

    Uses the closed form of the integral of r J_m(omega r)^2 over (0, R).
    """
    w = math.sqrt(lam)
    x = w * R
    j, jd = (float(v) for v in j_with_derivative(m, x))
    interior = 0.5 * R * R * (jd * jd + (1 - (m / x) ** 2) * j * j)
    if interior <= 0:
        raise OracleError("degenerate radial mode")
    return R * j * j / interior
