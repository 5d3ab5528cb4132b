"""Closed-form spectra on the interval (0, L).

Limit problem: -u'' = lam u, -u'(0) + b0 u(0) = 0, u'(L) + bL u(L) = 0.
Two-phase problem: conductivity 1 on (0, L) and eps on the two layers
(-eps h0, 0) and (L, L + eps hL), continuity of u and of the flux
(u' inside = eps u' in the layer), eps u' + beta u = 0 at the outer ends.

Both are solved by propagating the state (u, flux) from the left end with
exact trigonometric transfer matrices and imposing the right-end condition,
which yields a pole-free dispersion function of omega = sqrt(lam).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import OracleError
from .roots import scan_roots


def _propagate(u, q, omega, d, cond):
    """Advance (u, flux) over a slab of width d with conductivity cond.

    Inside, cond u'' = -omega^2 u and flux = cond u'; the local wavenumber is
    omega / sqrt(cond).
    """
    c = math.sqrt(cond)
    k = omega / c
    ck = c * omega  # cond * k
    cs, sn = np.cos(k * d), np.sin(k * d)
    return u * cs + q * sn / ck, -ck * u * sn + q * cs


def _limit_dispersion(L, b0, bL):
    def f(omega):
        omega = np.asarray(omega, dtype=float)
        # omega * (u'(L) + bL u(L)) from u(0) = 1, u'(0) = b0
        return (b0 + bL) * omega * np.cos(omega * L) + (b0 * bL - omega**2) * np.sin(omega * L)

    return f


def interval_limit_spectrum(L: float, b0: float, bL: float, k: int) -> np.ndarray:
    """First ``k`` Robin eigenvalues of the interval."""
    if L <= 0 or b0 < 0 or bL < 0 or k < 1:
        raise OracleError("need L > 0, b0, bL >= 0 and k >= 1")
    out = []
    if b0 == 0 and bL == 0:
        out.append(0.0)
    need = k - len(out)
    if need:
        f = _limit_dispersion(L, b0, bL)
        step = math.pi / (32 * L)
        om = scan_roots(f, need, step * 1e-6, step, stop=(k + 2) * math.pi / L + step)
        out.extend(om**2)
    return np.asarray(out[:k])


def _twophase_dispersion(L, eps, h0, hL, beta):
    def f(omega):
        omega = np.asarray(omega, dtype=float)
        u, q = np.ones_like(omega), np.full_like(omega, beta)
        u, q = _propagate(u, q, omega, eps * h0, eps)
        u, q = _propagate(u, q, omega, L, 1.0)
        u, q = _propagate(u, q, omega, eps * hL, eps)
        return q + beta * u

    return f


def interval_twophase_spectrum(L, eps, h0, hL, beta, k: int) -> np.ndarray:
    """First ``k`` eigenvalues of the two-phase interval problem."""
    if L <= 0 or not 0 < eps <= 1 or h0 <= 0 or hL <= 0 or beta <= 0 or k < 1:
        raise OracleError("need L > 0, 0 < eps <= 1, h0, hL > 0, beta > 0, k >= 1")
    f = _twophase_dispersion(L, eps, h0, hL, beta)
    # optical length: total phase per unit omega
    opt = L + math.sqrt(eps) * (h0 + hL)
    step = math.pi / (32 * opt)
    om = scan_roots(f, k, step * 1e-6, step, stop=(k + 2) * math.pi / L + step)
    return om**2


def _trig_sq_integral(a, b, k, d):
    """Integral over (0, d) of (a cos kx + b sin kx)^2."""
    return (
        0.5 * (a * a + b * b) * d
        + (a * a - b * b) * math.sin(2 * k * d) / (4 * k)
        + a * b * (1 - math.cos(2 * k * d)) / (2 * k)
    )


@dataclass(frozen=True)
class IntervalLimitMode:
    """v(x) = cos(omega x) + (b0/omega) sin(omega x), not normalised."""

    L: float
    b0: float
    bL: float
    lam: float

    @property
    def omega(self) -> float:
        return math.sqrt(self.lam)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        w = self.omega
        return np.cos(w * x) + (self.b0 / w) * np.sin(w * x)

    def norm_sq(self) -> float:
        w = self.omega
        return _trig_sq_integral(1.0, self.b0 / w, w, self.L)

    def traces(self):
        return float(self(0.0)), float(self(self.L))


@dataclass(frozen=True)
class IntervalTwoPhaseMode:
    """Closed-form two-phase eigenfunction, piecewise trigonometric.

    Normalised so that the integral of u^2 over (-eps h0, L + eps hL) is 1.
    """

    L: float
    eps: float
    h0: float
    hL: float
    beta: float
    lam: float

    def _pieces(self):
        w = math.sqrt(self.lam)
        e = self.eps
        # (start, width, cond, u_start, flux_start)
        pieces = []
        u, q = 1.0, self.beta
        x0 = -e * self.h0
        for width, cond in ((e * self.h0, e), (self.L, 1.0), (e * self.hL, e)):
            pieces.append((x0, width, cond, u, q))
            u, q = (float(v) for v in _propagate(u, q, w, width, cond))
            x0 += width
        return pieces

    def _scale(self) -> float:
        w = math.sqrt(self.lam)
        total = 0.0
        for _, width, cond, u, q in self._pieces():
            k = w / math.sqrt(cond)
            total += _trig_sq_integral(u, q / (cond * k), k, width)
        return 1.0 / math.sqrt(total)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        w = math.sqrt(self.lam)
        out = np.full(x.shape, np.nan)
        for x0, width, cond, u, q in self._pieces():
            k = w / math.sqrt(cond)
            inside = (x >= x0 - 1e-15) & (x <= x0 + width + 1e-15)
            y = x[inside] - x0
            out[inside] = u * np.cos(k * y) + q / (cond * k) * np.sin(k * y)
        if np.any(np.isnan(out)):
            raise OracleError("evaluation point outside the insulated interval")
        return out * self._scale()

    def layer_mass(self) -> float:
        w = math.sqrt(self.lam)
        total = 0.0
        pieces = self._pieces()
        for i in (0, 2):
            _, width, cond, u, q = pieces[i]
            k = w / math.sqrt(cond)
            total += _trig_sq_integral(u, q / (cond * k), k, width)
        return total * self._scale() ** 2

    def interior_norm_sq(self) -> float:
        w = math.sqrt(self.lam)
        _, width, _, u, q = self._pieces()[1]
        return _trig_sq_integral(u, q / w, w, width) * self._scale() ** 2
