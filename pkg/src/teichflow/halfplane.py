"""Upper half-plane model of a deformation disc.

Points, unimodular Möbius maps, hyperbolic distance, the vertical ray flow
and the horizontal horocycle flow, plus the polar parameters of a horocyclic
deformation and the Cayley bridge to the unit disc.

Everything here is pure arithmetic on doubles; the module-wide comparison
tolerance is ``TOL = 1e-12``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TOL = 1e-12

INFINITY = math.inf


@dataclass(frozen=True)
class HalfPlanePoint:
    """A point x + iy with y > 0."""

    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError("half-plane point must have finite coordinates")
        if self.im <= 0.0:
            raise ValueError(f"half-plane point needs im > 0, got {self.im}")

    @classmethod
    def from_complex(cls, z: complex) -> "HalfPlanePoint":
        return cls(float(z.real), float(z.imag))

    def as_complex(self) -> complex:
        return complex(self.re, self.im)

    def close_to(self, other: "HalfPlanePoint", tol: float = TOL) -> bool:
        return abs(self.re - other.re) <= tol and abs(self.im - other.im) <= tol


#: The disc-model origin of the half-plane.
ORIGIN = HalfPlanePoint(0.0, 1.0)


@dataclass(frozen=True)
class MoebiusMap:
    """Real Möbius map z -> (az+b)/(cz+d), normalized to ad - bc = 1.

    Construction rescales the coefficients; a non-positive determinant is
    rejected since the map must preserve the upper half-plane.
    """

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        if not math.isfinite(det) or det <= 0.0:
            raise ValueError(f"Möbius map needs positive determinant, got {det}")
        r = math.sqrt(det)
        object.__setattr__(self, "a", self.a / r)
        object.__setattr__(self, "b", self.b / r)
        object.__setattr__(self, "c", self.c / r)
        object.__setattr__(self, "d", self.d / r)
        det = self.a * self.d - self.b * self.c
        if abs(det - 1.0) > 1e-12:
            raise ValueError(f"Möbius normalization failed, det = {det}")

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    def __call__(self, z: HalfPlanePoint) -> HalfPlanePoint:
        w = z.as_complex()
        img = (self.a * w + self.b) / (self.c * w + self.d)
        return HalfPlanePoint(img.real, img.imag)

    def apply_complex(self, w: complex) -> complex:
        return (self.a * w + self.b) / (self.c * w + self.d)

    def apply_boundary(self, x: float) -> float:
        """Action on the boundary circle R u {inf}."""
        if math.isinf(x):
            return self.a / self.c if self.c != 0.0 else INFINITY
        den = self.c * x + self.d
        if den == 0.0:
            return INFINITY
        return (self.a * x + self.b) / den

    def compose(self, other: "MoebiusMap") -> "MoebiusMap":
        """self after other (matrix product self @ other)."""
        return MoebiusMap(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "MoebiusMap":
        return MoebiusMap(self.d, -self.b, -self.c, self.a)


@dataclass(frozen=True)
class DiscDirectionFrame:
    """Direction data of a disc: base point (image of i) and Ext there.

    The extremal length of the directing foliation at disc coordinate z is
    ``ext_at_base / im(z)``; that profile is what couples the two flows.
    """

    base: HalfPlanePoint
    ext_at_base: float

    def __post_init__(self):
        if not (math.isfinite(self.ext_at_base) and self.ext_at_base > 0.0):
            raise ValueError("ext_at_base must be a positive real")

    def ext_at(self, z: HalfPlanePoint) -> float:
        return self.ext_at_base / z.im


@dataclass(frozen=True)
class HoroPolar:
    """Polar coordinates (k, theta) of a horocyclic deformation in the disc.

    ``is_base`` flags the degenerate time-zero polar, where theta is fixed
    to pi/2 by continuity.
    """

    k: float
    theta: float

    def __post_init__(self):
        if not (0.0 <= self.k < 1.0):
            raise ValueError(f"polar radius must lie in [0, 1), got {self.k}")
        if not (-math.pi < self.theta <= math.pi):
            raise ValueError("polar angle must lie in (-pi, pi]")

    @property
    def is_base(self) -> bool:
        return self.k == 0.0

    def as_disc_point(self) -> complex:
        return self.k * complex(math.cos(self.theta), math.sin(self.theta))


def hyp_distance(z: HalfPlanePoint, w: HalfPlanePoint) -> float:
    """Hyperbolic distance arccosh(1 + |z-w|^2 / (2 im z im w))."""
    dx = z.re - w.re
    dy = z.im - w.im
    arg = 1.0 + (dx * dx + dy * dy) / (2.0 * z.im * w.im)
    return math.acosh(max(arg, 1.0))


def ray_flow(z: HalfPlanePoint, t: float) -> HalfPlanePoint:
    """Vertical geodesic flow z -> re(z) + i e^t im(z); |t| is the distance moved."""
    return HalfPlanePoint(z.re, math.exp(t) * z.im)


def horo_flow(z: HalfPlanePoint, s: float, frame: DiscDirectionFrame) -> HalfPlanePoint:
    """Horocyclic flow for the direction described by ``frame``.

    At every height this is the Euclidean translation z -> z - s * ext_at_base:
    conjugating the base-point formula by the automorphism that moves z to i
    rescales the displacement by im(z) while Ext shrinks by the same factor,
    so the two cancel.  Requires the frame to be based at i.
    """
    if not frame.base.close_to(ORIGIN, 1e-9):
        raise ValueError("horo_flow needs a frame based at the disc origin i")
    return HalfPlanePoint(z.re - s * frame.ext_at_base, z.im)


def horo_polar(t: float, e0: float, ex: float) -> HoroPolar:
    """Polar parameters (k_t, theta_t) of the horocyclic deformation.

    ``e0`` is Ext of the direction at the reference point, ``ex`` at the
    deformed point; only their ratio matters, so (e0, ex) -> (L^2 e0, L^2 ex)
    leaves the polar unchanged.  t = 0 returns the flagged base polar.
    """
    if e0 <= 0.0 or ex <= 0.0:
        raise ValueError("extremal lengths must be positive")
    if t == 0.0:
        return HoroPolar(0.0, math.pi / 2.0)
    u = t * ex / (2.0 * e0)
    k = abs(u) / math.hypot(1.0, u)
    theta = math.atan(1.0 / u)
    return HoroPolar(k, theta)


def polar_travel_distance(t: float, e0: float, ex: float) -> float:
    """Distance 2*atanh(k_t) from the base point to its horocyclic image.

    Evaluated through the cancellation-free rearrangement
    2*atanh(u/sqrt(1+u^2)) = log((1+k) * sqrt(1+u^2) * (sqrt(1+u^2)+|u|)),
    which stays accurate when k approaches 1.
    """
    if e0 <= 0.0 or ex <= 0.0:
        raise ValueError("extremal lengths must be positive")
    u = abs(t) * ex / (2.0 * e0)
    s = math.hypot(1.0, u)
    k = u / s
    return math.log((1.0 + k) * s * (s + u))


def horo_displacement_consistency(t: float, e0: float, ex: float) -> float:
    """|2 atanh(k_t) - 2 asinh(t ex / (2 e0))|.

    The polar travel distance and the half-plane displacement distance
    describe the same pair of points, so the result is zero up to rounding.
    """
    u = t * ex / (2.0 * e0)
    return abs(polar_travel_distance(t, e0, ex) - 2.0 * math.asinh(u))


def gromov_product(base: HalfPlanePoint, y: HalfPlanePoint, z: HalfPlanePoint) -> float:
    """(1/2)(d(base,y) + d(base,z) - d(y,z)), clipped at 0 against roundoff."""
    val = 0.5 * (hyp_distance(base, y) + hyp_distance(base, z) - hyp_distance(y, z))
    return max(val, 0.0)


def disc_to_halfplane(w: complex) -> HalfPlanePoint:
    """Cayley map of the open unit disc onto the half-plane, 0 -> i.

    Normalized so that the polar curve t -> k_t e^{i theta_t} lands on the
    horizontal line im = 1 at re = -t * ex/e0.
    """
    if abs(w) >= 1.0:
        raise ValueError(f"point {w} is not in the open unit disc")
    z = 1j * (1.0 + w) / (1.0 - w)
    return HalfPlanePoint(z.real, z.imag)


def halfplane_to_disc(z: HalfPlanePoint) -> complex:
    w = z.as_complex()
    return (w - 1j) / (w + 1j)


def cayley_roundtrip(w: complex) -> complex:
    """disc -> half-plane -> disc; the identity within 1e-12."""
    return halfplane_to_disc(disc_to_halfplane(w))
