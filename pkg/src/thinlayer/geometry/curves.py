"""Analytic boundary descriptions.

Every closed boundary is parametrised counter-clockwise by an angle-like
parameter ``s`` in ``[0, 2*pi)``; the domain is star-shaped with respect to
the origin so that ``rho * point(s)`` for ``rho`` in ``[0, 1]`` sweeps it.
The 1-D ``Interval`` has a two-point boundary ``s in {0, L}``.

Curvature uses the outward-offset sign convention: positive on convex arcs,
so that offset arc length grows like ``1 + t * kappa``.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from ..errors import GeometryError

TWO_PI = 2.0 * math.pi

# trapezoid nodes used for periodic quadrature of perimeter/area/curvature
_PERIODIC_NODES = 4096


@dataclass(frozen=True)
class BoundaryPoint:
    s: float
    x: np.ndarray
    nu0: np.ndarray
    H: float


class BoundarySpec(ABC):
    """Common interface of the supported boundary kinds."""

    dim: int = 2
    closed: bool = True

    @property
    def param_length(self) -> float:
        return TWO_PI

    def to_unit(self, s):
        """Map the boundary parameter to the profile coordinate in [0, 1)."""
        return np.mod(np.asarray(s, dtype=float), TWO_PI) / TWO_PI

    @abstractmethod
    def point(self, s) -> np.ndarray: ...

    @abstractmethod
    def velocity(self, s) -> np.ndarray:
        """Derivative of ``point`` with respect to ``s``."""

    @abstractmethod
    def curvature(self, s): ...

    def speed(self, s):
        v = self.velocity(s)
        return np.hypot(v[..., 0], v[..., 1])

    def normal(self, s) -> np.ndarray:
        v = self.velocity(s)
        sp = np.hypot(v[..., 0], v[..., 1])
        return np.stack([v[..., 1] / sp, -v[..., 0] / sp], axis=-1)

    def boundary_point(self, s: float) -> BoundaryPoint:
        return BoundaryPoint(
            s=float(s),
            x=np.asarray(self.point(s), dtype=float),
            nu0=np.asarray(self.normal(s), dtype=float),
            H=float(self.curvature(s)),
        )

    def _nodes(self, n=_PERIODIC_NODES):
        return np.arange(n) * (TWO_PI / n)

    def perimeter(self) -> float:
        s = self._nodes()
        return float(np.mean(self.speed(s)) * TWO_PI)

    def area(self) -> float:
        s = self._nodes()
        p, v = self.point(s), self.velocity(s)
        return float(0.5 * np.mean(p[:, 0] * v[:, 1] - p[:, 1] * v[:, 0]) * TWO_PI)

    def total_curvature(self, n=_PERIODIC_NODES) -> float:
        s = self._nodes(n)
        return float(np.mean(self.curvature(s) * self.speed(s)) * TWO_PI)

    def max_radius(self) -> float:
        p = self.point(self._nodes())
        return float(np.max(np.hypot(p[:, 0], p[:, 1])))

    def min_curvature(self) -> float:
        return float(np.min(self.curvature(self._nodes())))


@dataclass(frozen=True)
class Interval(BoundarySpec):
    """The segment (0, L); its boundary is the two endpoints."""

    L: float

    dim = 1
    closed = False

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise GeometryError(f"Interval length must be positive, got {self.L}")

    @property
    def param_length(self) -> float:
        return self.L

    def to_unit(self, s):
        return np.asarray(s, dtype=float) / self.L

    def _check(self, s):
        s = np.asarray(s, dtype=float)
        bad = ~(np.isclose(s, 0.0) | np.isclose(s, self.L))
        if np.any(bad):
            raise GeometryError(f"Interval boundary parameter must be 0 or L={self.L}, got {s}")
        return s

    def point(self, s):
        return self._check(s)[..., None].copy()

    def velocity(self, s):
        raise GeometryError("a two-point boundary has no tangent")

    def speed(self, s):
        return np.ones_like(self._check(s))

    def normal(self, s):
        s = self._check(s)
        return np.where(np.isclose(s, 0.0), -1.0, 1.0)[..., None]

    def curvature(self, s):
        return np.zeros_like(self._check(s))

    def perimeter(self) -> float:
        # counting measure of {0, L}
        return 2.0

    def area(self) -> float:
        return self.L

    def total_curvature(self, n=None) -> float:
        return 0.0

    def max_radius(self) -> float:
        return self.L

    def min_curvature(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Disk(BoundarySpec):
    R: float

    def __post_init__(self):
        if not (self.R > 0 and math.isfinite(self.R)):
            raise GeometryError(f"Disk radius must be positive, got {self.R}")

    def point(self, s):
        s = np.asarray(s, dtype=float)
        return self.R * np.stack([np.cos(s), np.sin(s)], axis=-1)

    def velocity(self, s):
        s = np.asarray(s, dtype=float)
        return self.R * np.stack([-np.sin(s), np.cos(s)], axis=-1)

    def speed(self, s):
        return np.full(np.shape(s), self.R, dtype=float)

    def normal(self, s):
        s = np.asarray(s, dtype=float)
        return np.stack([np.cos(s), np.sin(s)], axis=-1)

    def curvature(self, s):
        return np.full(np.shape(s), 1.0 / self.R)

    def perimeter(self) -> float:
        return TWO_PI * self.R

    def area(self) -> float:
        return math.pi * self.R**2

    def max_radius(self) -> float:
        return self.R


@dataclass(frozen=True)
class Ellipse(BoundarySpec):
    """Ellipse x = a cos s, y = b sin s (``s`` is the eccentric angle)."""

    a: float
    b: float

    def __post_init__(self):
        for v in (self.a, self.b):
            if not (v > 0 and math.isfinite(v)):
                raise GeometryError(f"Ellipse semi-axes must be positive, got {self.a}, {self.b}")

    def point(self, s):
        s = np.asarray(s, dtype=float)
        return np.stack([self.a * np.cos(s), self.b * np.sin(s)], axis=-1)

    def velocity(self, s):
        s = np.asarray(s, dtype=float)
        return np.stack([-self.a * np.sin(s), self.b * np.cos(s)], axis=-1)

    def curvature(self, s):
        s = np.asarray(s, dtype=float)
        q = (self.a * np.sin(s)) ** 2 + (self.b * np.cos(s)) ** 2
        return self.a * self.b / q**1.5

    def area(self) -> float:
        return math.pi * self.a * self.b

    def max_radius(self) -> float:
        return max(self.a, self.b)


@dataclass(frozen=True)
class PolarCurve(BoundarySpec):
    """Star-shaped curve r(theta) = c_0 + sum_k (c_k cos k theta + d_k sin k theta).

    ``cos_coeffs`` holds (c_0, c_1, ..., c_K) and ``sin_coeffs`` holds
    (d_1, ..., d_K); the parameter ``s`` is the polar angle.
    """

    cos_coeffs: tuple
    sin_coeffs: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.cos_coeffs, dtype=float)
        d = np.asarray(self.sin_coeffs, dtype=float)
        if c.size == 0 or not (np.all(np.isfinite(c)) and np.all(np.isfinite(d))):
            raise GeometryError("PolarCurve coefficients must be finite and non-empty")
        object.__setattr__(self, "cos_coeffs", tuple(float(x) for x in c))
        object.__setattr__(self, "sin_coeffs", tuple(float(x) for x in d))
        r = self.radius(self._nodes())
        if np.min(r) <= 0:
            raise GeometryError(f"PolarCurve radius must stay positive (min {np.min(r):.3g})")
        # bounded curvature: sampled extremes must not grow under refinement
        k1 = np.max(np.abs(self.curvature(self._nodes(2048))))
        k2 = np.max(np.abs(self.curvature(self._nodes(8192))))
        if not np.isfinite(k2) or k2 > 1.5 * k1:
            raise GeometryError("PolarCurve curvature is not bounded (boundary not C^{1,1})")

    def _series(self, s, order):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        c, d = self.cos_coeffs, self.sin_coeffs
        for k, ck in enumerate(c):
            if order == 0:
                out = out + ck * np.cos(k * s)
            elif order == 1:
                out = out - k * ck * np.sin(k * s)
            else:
                out = out - k * k * ck * np.cos(k * s)
        for k, dk in enumerate(d, start=1):
            if order == 0:
                out = out + dk * np.sin(k * s)
            elif order == 1:
                out = out + k * dk * np.cos(k * s)
            else:
                out = out - k * k * dk * np.sin(k * s)
        return out

    def radius(self, s):
        return self._series(s, 0)

    def point(self, s):
        s = np.asarray(s, dtype=float)
        r = self.radius(s)
        return np.stack([r * np.cos(s), r * np.sin(s)], axis=-1)

    def velocity(self, s):
        s = np.asarray(s, dtype=float)
        r, dr = self._series(s, 0), self._series(s, 1)
        return np.stack(
            [dr * np.cos(s) - r * np.sin(s), dr * np.sin(s) + r * np.cos(s)], axis=-1
        )

    def curvature(self, s):
        r, dr, ddr = self._series(s, 0), self._series(s, 1), self._series(s, 2)
        return (r * r + 2 * dr * dr - r * ddr) / (r * r + dr * dr) ** 1.5


def curvature(spec: BoundarySpec, s):
    """Signed curvature of ``spec`` at parameter ``s`` (0 for an interval)."""
    return spec.curvature(s)


def offset_point(p: BoundaryPoint, t: float) -> np.ndarray:
    """Return ``p.x + t * p.nu0``."""
    if t < 0:
        raise GeometryError(f"offset distance must be non-negative, got {t}")
    return p.x + t * p.nu0


def make_spec(kind: str, **params) -> BoundarySpec:
    """Build a spec from a kind name, as used by the run configuration."""
    kind = kind.lower()
    if kind == "interval":
        return Interval(float(params["L"]))
    if kind == "disk":
        return Disk(float(params["R"]))
    if kind == "ellipse":
        return Ellipse(float(params["a"]), float(params["b"]))
    if kind in ("polar", "polarcurve"):
        return PolarCurve(tuple(params["cos_coeffs"]), tuple(params.get("sin_coeffs", ())))
    raise GeometryError(f"unknown boundary kind {kind!r}")


def spec_params(spec: BoundarySpec) -> dict:
    if isinstance(spec, Interval):
        return {"kind": "interval", "L": spec.L}
    if isinstance(spec, Disk):
        return {"kind": "disk", "R": spec.R}
    if isinstance(spec, Ellipse):
        return {"kind": "ellipse", "a": spec.a, "b": spec.b}
    if isinstance(spec, PolarCurve):
        return {
            "kind": "polar",
            "cos_coeffs": list(spec.cos_coeffs),
            "sin_coeffs": list(spec.sin_coeffs),
        }
    raise GeometryError(f"unsupported spec {spec!r}")


def arcs(mask: np.ndarray, s: np.ndarray) -> list:
    """Group consecutive ``True`` samples of a periodic mask into (s_start, s_end) arcs."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return []
    if mask.all():
        return [(float(s[0]), float(s[-1]))]
    n = mask.size
    # rotate so the sequence starts on a False sample
    shift = int(np.argmin(mask))
    m = np.roll(mask, -shift)
    ss = np.roll(s, -shift)
    out = []
    i = 0
    while i < n:
        if m[i]:
            j = i
            while j + 1 < n and m[j + 1]:
                j += 1
            out.append((float(ss[i]), float(ss[j])))
            i = j + 1
        else:
            i += 1
    return out

