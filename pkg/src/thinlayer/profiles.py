"""Thickness profiles on the boundary and the Robin coefficient they induce.

A profile is a function of the unit boundary coordinate ``tau`` in [0, 1)
(``spec.to_unit(s)``). On an interval the two endpoints sit at ``tau = 0``
and ``tau = 1``; a piecewise-constant profile with two values then assigns
one value per endpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ProfileError
from .geometry.curves import BoundarySpec, Disk, Interval, TWO_PI

MASS_TOL = 1e-10
_SAMPLES = 4096


@dataclass(frozen=True)
class ThicknessProfile:
    """Thickness ``h`` on the boundary.

    Use the constructors :meth:`constant`, :meth:`piecewise` and :meth:`trig`
    rather than the raw fields. ``cos_coeffs`` are (a_0, a_1, ...) and
    ``sin_coeffs`` (b_1, ...) in ``a_0 + sum a_k cos(2 pi k tau) + b_k sin(2 pi k tau)``.
    """

    kind: str
    values: tuple = ()
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()
    h_min: float = field(init=False)
    sup: float = field(init=False)
    lip: float = field(init=False)

    def __post_init__(self):
        if self.kind == "constant":
            if len(self.values) != 1:
                raise ProfileError("constant profile takes exactly one value")
            lo = hi = self.values[0]
            lip = 0.0
        elif self.kind == "piecewise":
            if len(self.values) < 1:
                raise ProfileError("piecewise profile needs at least one value")
            lo, hi = min(self.values), max(self.values)
            lip = 0.0 if lo == hi else math.inf
        elif self.kind == "trig":
            if len(self.cos_coeffs) < 1:
                raise ProfileError("trig profile needs a constant coefficient")
            lip = sum(TWO_PI * k * abs(a) for k, a in enumerate(self.cos_coeffs)) + sum(
                TWO_PI * k * abs(b) for k, b in enumerate(self.sin_coeffs, start=1)
            )
            v = self(np.arange(_SAMPLES) / _SAMPLES)
            lo = float(v.min()) - lip / (2 * _SAMPLES)
            hi = float(v.max()) + lip / (2 * _SAMPLES)
        else:
            raise ProfileError(f"unknown profile kind {self.kind!r}")
        vals = np.asarray(self.values + self.cos_coeffs + self.sin_coeffs, dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ProfileError("profile values must be finite")
        if self.kind == "trig":
            if float(self(np.arange(_SAMPLES) / _SAMPLES).min()) < 0:
                raise ProfileError("thickness must be non-negative")
            lo = max(lo, 0.0)
        elif lo < 0:
            raise ProfileError(f"thickness must be non-negative, got min {lo}")
        object.__setattr__(self, "h_min", float(lo))
        object.__setattr__(self, "sup", float(hi))
        object.__setattr__(self, "lip", float(lip))

    @classmethod
    def constant(cls, c: float) -> "ThicknessProfile":
        return cls("constant", values=(float(c),))

    @classmethod
    def piecewise(cls, values) -> "ThicknessProfile":
        return cls("piecewise", values=tuple(float(v) for v in values))

    @classmethod
    def trig(cls, cos_coeffs, sin_coeffs=()) -> "ThicknessProfile":
        return cls(
            "trig",
            cos_coeffs=tuple(float(v) for v in cos_coeffs),
            sin_coeffs=tuple(float(v) for v in sin_coeffs),
        )

    @property
    def n_arcs(self) -> int:
        return len(self.values) if self.kind == "piecewise" else 1

    @property
    def is_continuous(self) -> bool:
        return self.lip < math.inf

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.kind == "constant":
            return np.full(tau.shape, self.values[0])
        if self.kind == "piecewise":
            n = len(self.values)
            idx = np.clip(np.floor(tau * n + 1e-12).astype(int), 0, n - 1)
            return np.asarray(self.values)[idx]
        out = np.zeros(tau.shape)
        for k, a in enumerate(self.cos_coeffs):
            out = out + a * np.cos(TWO_PI * k * tau)
        for k, b in enumerate(self.sin_coeffs, start=1):
            out = out + b * np.sin(TWO_PI * k * tau)
        return out

    def derivative(self, tau):
        """d h / d tau (zero away from the jumps of a piecewise profile)."""
        tau = np.asarray(tau, dtype=float)
        if self.kind != "trig":
            return np.zeros(tau.shape)
        out = np.zeros(tau.shape)
        for k, a in enumerate(self.cos_coeffs):
            out = out - TWO_PI * k * a * np.sin(TWO_PI * k * tau)
        for k, b in enumerate(self.sin_coeffs, start=1):
            out = out + TWO_PI * k * b * np.cos(TWO_PI * k * tau)
        return out

    def breakpoints(self) -> np.ndarray:
        """Unit coordinates of the jumps (arc boundaries) of a piecewise profile."""
        if self.kind != "piecewise" or len(self.values) == 1:
            return np.zeros(0)
        n = len(self.values)
        return np.arange(n) / n

    def scaled(self, factor: float) -> "ThicknessProfile":
        if self.kind == "trig":
            return ThicknessProfile.trig(
                [factor * c for c in self.cos_coeffs], [factor * c for c in self.sin_coeffs]
            )
        return ThicknessProfile(self.kind, values=tuple(factor * v for v in self.values))

    def to_dict(self) -> dict:
        if self.kind == "trig":
            return {
                "representation": "trig",
                "cos_coeffs": list(self.cos_coeffs),
                "sin_coeffs": list(self.sin_coeffs),
            }
        return {"representation": self.kind, "values": list(self.values)}


@dataclass(frozen=True)
class RobinCoefficient:
    """b = beta / (1 + beta h), or a fixed constant ``value`` when no profile is given.

    The constant form exists for test paths such as the Neumann pencil (b = 0).
    """

    beta: float
    profile: ThicknessProfile | None = None
    value: float | None = None

    def __call__(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.profile is None:
            return np.full(tau.shape, float(self.value))
        return self.beta / (1.0 + self.beta * self.profile(tau))

    @classmethod
    def constant(cls, b: float) -> "RobinCoefficient":
        if b < 0:
            raise ProfileError(f"Robin coefficient must be non-negative, got {b}")
        return cls(beta=float(b), value=float(b))

    def breakpoints(self) -> np.ndarray:
        return np.zeros(0) if self.profile is None else self.profile.breakpoints()


def robin_coefficient(h: ThicknessProfile, beta: float) -> RobinCoefficient:
    if not beta > 0:
        raise ProfileError(f"beta must be positive, got {beta}")
    return RobinCoefficient(beta=float(beta), profile=h)


def invert_robin(b, beta: float):
    """Thickness reproducing a given Robin coefficient: 1/b - 1/beta."""
    return 1.0 / np.asarray(b, dtype=float) - 1.0 / beta


def _arc_lengths(spec: BoundarySpec, n: int) -> np.ndarray:
    """Lengths of the n equal-parameter arcs of a closed boundary."""
    if isinstance(spec, Disk):
        return np.full(n, TWO_PI * spec.R / n)
    x, w = np.polynomial.legendre.leggauss(24)
    panels = 16
    out = np.empty(n)
    for i in range(n):
        edges = np.linspace(i, i + 1, panels + 1) * TWO_PI / n
        a, b = edges[:-1, None], edges[1:, None]
        s = 0.5 * (a + b) + 0.5 * (b - a) * x[None, :]
        out[i] = float(np.sum(0.5 * (b - a) * w[None, :] * spec.speed(s)))
    return out


def boundary_mass(h: ThicknessProfile, spec: BoundarySpec) -> float:
    """Integral of h over the boundary (counting measure for an interval)."""
    if isinstance(spec, Interval):
        return float(np.sum(h(np.array([0.0, 1.0]))))
    if h.kind == "constant":
        return h.values[0] * spec.perimeter()
    if h.kind == "piecewise":
        return float(np.dot(h.values, _arc_lengths(spec, len(h.values))))
    if isinstance(spec, Disk):
        return TWO_PI * spec.R * h.cos_coeffs[0]
    s = np.arange(_SAMPLES) * (TWO_PI / _SAMPLES)
    return float(np.mean(h(spec.to_unit(s)) * spec.speed(s)) * TWO_PI)


def in_admissible_class(h: ThicknessProfile, m: float, spec: BoundarySpec, tol=MASS_TOL) -> bool:
    return h.h_min >= 0 and boundary_mass(h, spec) <= m + tol


def saturate_mass(h: ThicknessProfile, m: float, spec: BoundarySpec) -> ThicknessProfile:
    """Rescale ``h`` so its boundary mass equals ``m``."""
    mass = boundary_mass(h, spec)
    if not mass > 0:
        raise ProfileError("cannot saturate a profile with zero mass")
    if mass == m:
        return h
    return h.scaled(m / mass)


def oscillating_profile(a: float, b: float, k: int) -> ThicknessProfile:
    """Alternate ``a`` and ``b`` on 2k equal arcs."""
    if a < 0 or b < 0:
        raise ProfileError("oscillating profile values must be non-negative")
    if k < 2 or k % 2:
        raise ProfileError(f"k must be a positive even integer, got {k}")
    return ThicknessProfile.piecewise([a, b] * k)


def effective_profile(a: float, b: float, beta: float) -> ThicknessProfile:
    """Constant profile whose Robin coefficient is the mean of b_a and b_b."""
    bbar = 0.5 * (beta / (1 + beta * a) + beta / (1 + beta * b))
    return ThicknessProfile.constant(1.0 / bbar - 1.0 / beta)


def make_profile(representation: str, values=(), cos_coeffs=(), sin_coeffs=()) -> ThicknessProfile:
    representation = representation.lower()
    if representation == "constant":
        vals = list(values)
        if len(vals) != 1:
            raise ProfileError("constant profile takes one value")
        return ThicknessProfile.constant(vals[0])
    if representation in ("piecewise", "piecewiseconstant"):
        return ThicknessProfile.piecewise(values)
    if representation in ("trig", "trigpolynomial"):
        return ThicknessProfile.trig(cos_coeffs, sin_coeffs)
    raise ProfileError(f"unknown profile representation {representation!r}")
