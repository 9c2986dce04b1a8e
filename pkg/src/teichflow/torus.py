"""Flat-torus model of a one-disc Teichmüller space.

A marked torus is its lattice modulus tau in the upper half-plane, a measured
foliation is a nonzero real slope pair (p, q), and everything the deformation
flows need comes in closed form:

    Ext_tau(p, q) = |p + q tau|^2 / im(tau)
    i((p,q), (r,s)) = |p s - q r|

The sup in Kerckhoff's distance formula is taken over primitive slopes
enumerated with a Stern-Brocot mediant tree.  Dehn twists, the geodesic ray
flow, the horocyclic flow and the sampled boundary functionals are built on
top of these formulas.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .halfplane import (
    INFINITY,
    HalfPlanePoint,
    MoebiusMap,
    hyp_distance,
)

#: Default Stern-Brocot depth; 2^(depth+1) slopes including the two roots.
DEFAULT_DEPTH = 12

#: Base point of the model: the unit-square torus.
BASE_TAU = HalfPlanePoint(0.0, 1.0)


@dataclass(frozen=True)
class TorusPoint:
    """Marked flat torus with lattice Z + tau Z."""

    tau: HalfPlanePoint

    @classmethod
    def from_complex(cls, z: complex) -> "TorusPoint":
        return cls(HalfPlanePoint.from_complex(z))

    def as_complex(self) -> complex:
        return self.tau.as_complex()


BASE_POINT = TorusPoint(BASE_TAU)


def _as_integer(x: float):
    n = round(x)
    return n if x == n else None


@dataclass(frozen=True)
class TorusFoliation:
    """Measured foliation as a nonzero slope pair (p, q)."""

    p: float
    q: float

    def __post_init__(self):
        if not (math.isfinite(self.p) and math.isfinite(self.q)):
            raise ValueError("slope pair must be finite")
        if self.p == 0.0 and self.q == 0.0:
            raise ValueError("slope pair (0, 0) is not a foliation")

    @property
    def is_simple_closed_curve(self) -> bool:
        """True for primitive integer pairs."""
        a, b = _as_integer(self.p), _as_integer(self.q)
        if a is None or b is None:
            return False
        return math.gcd(a, b) == 1

    @property
    def is_uniquely_ergodic(self) -> bool:
        """True when the slope is not (numerically) a rational direction.

        A pair counts as rational if some integer pair (a, b) with
        denominator up to 10^6 matches it to relative precision 1e-9.
        """
        scale = max(abs(self.p), abs(self.q))
        if self.q == 0.0 or self.p == 0.0:
            return False
        frac = Fraction(self.p / self.q).limit_denominator(10**6)
        resid = abs(self.p * frac.denominator - self.q * frac.numerator)
        return resid > 1e-9 * scale * frac.denominator

    def scaled(self, factor: float) -> "TorusFoliation":
        return TorusFoliation(self.p * factor, self.q * factor)


def ext_length(x: TorusPoint, f: TorusFoliation) -> float:
    """Extremal length |p + q tau|^2 / im(tau); degree-2 homogeneous in (p, q)."""
    re, im = x.tau.re, x.tau.im
    a = f.p + f.q * re
    b = f.q * im
    return (a * a + b * b) / im


def intersection(f: TorusFoliation, g: TorusFoliation) -> float:
    """Geometric intersection number |p s - q r| of two slope pairs."""
    return abs(f.p * g.q - f.q * g.p)


@lru_cache(maxsize=8)
def primitive_slopes(depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Primitive slope pairs down to the given mediant depth.

    Level 0 holds the roots (1, 0) and (0, 1); each further level inserts the
    mediant between every pair of tree-neighbours on both the positive and
    the negative side, giving 2^(depth+1) pairs in total.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    ps = [1, 0]
    qs = [0, 1]
    # (left, right) bounding pairs; positive side then negative side
    frontier = [((0, 1), (1, 0)), ((-1, 0), (0, 1))]
    for _ in range(depth):
        nxt = []
        for (lp, lq), (rp, rq) in frontier:
            mp, mq = lp + rp, lq + rq
            ps.append(mp)
            qs.append(mq)
            nxt.append(((lp, lq), (mp, mq)))
            nxt.append(((mp, mq), (rp, rq)))
        frontier = nxt
    return np.asarray(ps, dtype=np.int64), np.asarray(qs, dtype=np.int64)


def _ext_array(x: TorusPoint, ps: np.ndarray, qs: np.ndarray) -> np.ndarray:
    re, im = x.tau.re, x.tau.im
    a = ps + qs * re
    b = qs * im
    return (a * a + b * b) / im


def kerckhoff_distance(x: TorusPoint, y: TorusPoint, depth: int | None = DEFAULT_DEPTH) -> float:
    """log sup over enumerated simple closed curves of Ext_y / Ext_x.

    ``depth=None`` deepens the enumeration one level at a time until the sup
    moves by less than 1e-9 (capped at depth 20).
    """
    if depth is not None:
        if depth < 1:
            raise ValueError("depth must be >= 1")
        ps, qs = primitive_slopes(depth)
        ratio = _ext_array(y, ps, qs) / _ext_array(x, ps, qs)
        return math.log(float(np.max(ratio)))
    prev = kerckhoff_distance(x, y, DEFAULT_DEPTH)
    for d in range(DEFAULT_DEPTH + 1, 21):
        cur = kerckhoff_distance(x, y, d)
        if abs(cur - prev) < 1e-9:
            return cur
        prev = cur
    return prev


def kerckhoff_maximizer(x: TorusPoint, y: TorusPoint, depth: int = DEFAULT_DEPTH) -> TorusFoliation:
    """Slope attaining the enumerated Kerckhoff sup (ties: first in tree order)."""
    ps, qs = primitive_slopes(depth)
    ratio = _ext_array(y, ps, qs) / _ext_array(x, ps, qs)
    i = int(np.argmax(ratio))
    return TorusFoliation(float(ps[i]), float(qs[i]))


@dataclass(frozen=True)
class GMVector:
    """Sampled boundary functional: slope -> nonnegative value."""

    slopes: tuple[tuple[float, float], ...]
    values: tuple[float, ...]
    normalization: str = "raw"

    def __post_init__(self):
        if len(self.slopes) != len(self.values) or not self.slopes:
            raise ValueError("sample slopes and values must align and be nonempty")
        if any(v < 0.0 for v in self.values):
            raise ValueError("entries must be nonnegative")
        if all(v == 0.0 for v in self.values):
            raise ValueError("at least one entry must be positive")
        if self.normalization not in ("raw", "unit-euclidean"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    def unit(self) -> "GMVector":
        arr = np.asarray(self.values)
        arr = arr / np.linalg.norm(arr)
        return GMVector(self.slopes, tuple(float(v) for v in arr), "unit-euclidean")


def gm_vector(
    x: TorusPoint,
    base: TorusPoint,
    sample: list[TorusFoliation],
    depth: int = DEFAULT_DEPTH,
) -> GMVector:
    """Normalized extremal-length functional sqrt(Ext_x(.) / e^d) on the sample.

    d is the Kerckhoff distance from the base point at the given depth.
    """
    if not sample:
        raise ValueError("sample must be nonempty")
    d = kerckhoff_distance(base, x, depth)
    scale = math.exp(d)
    slopes = tuple((f.p, f.q) for f in sample)
    values = tuple(math.sqrt(ext_length(x, f) / scale) for f in sample)
    return GMVector(slopes, values, "raw")


def intersection_vector(f: TorusFoliation, sample: list[TorusFoliation]) -> GMVector:
    """The target functional alpha -> i(f, alpha) on the sample."""
    slopes = tuple((g.p, g.q) for g in sample)
    values = tuple(intersection(f, g) for g in sample)
    return GMVector(slopes, values, "raw")


def projective_distance(u: GMVector, v: GMVector) -> float:
    """Euclidean distance of the unit-normalized vectors; 0 iff projectively equal."""
    if u.slopes != v.slopes:
        raise ValueError("projective distance needs identical sample sets")
    a = np.asarray(u.unit().values)
    b = np.asarray(v.unit().values)
    return float(np.linalg.norm(a - b))


# ---------------------------------------------------------------------------
# mapping classes and Dehn twists


def mapping_class_point(m: tuple[tuple[float, float], tuple[float, float]], x: TorusPoint) -> TorusPoint:
    """Möbius action of an integer unimodular matrix on the modulus."""
    (a, b), (c, d) = m
    return TorusPoint(MoebiusMap(a, b, c, d)(x.tau))


def mapping_class_curve_pullback(
    m: tuple[tuple[float, float], tuple[float, float]], f: TorusFoliation
) -> TorusFoliation:
    """Curve transport satisfying Ext_{m.tau}(g) = Ext_tau(pullback(g)) exactly."""
    (a, b), (c, d) = m
    return TorusFoliation(d * f.p + b * f.q, c * f.p + a * f.q)


@dataclass(frozen=True)
class DehnTwist:
    """n twists along a primitive integer slope.

    ``point_map`` moves the marked torus; ``curve_map`` is the slope action
    transporting curves to the twisted point, i.e. the inverse twist on
    curves, so that ext_length(point_map(tau), g) = ext_length(tau,
    curve_map(g)) holds exactly, and equivalently
    ext_length(point_map(tau), curve_forward(g)) = ext_length(tau, g).
    """

    around: TorusFoliation
    n: int
    point_map: MoebiusMap

    def _pq(self):
        return round(self.around.p), round(self.around.q)

    def curve_map(self, g: TorusFoliation) -> TorusFoliation:
        p0, q0 = self._pq()
        n = self.n
        return TorusFoliation(
            (1 + n * p0 * q0) * g.p - n * p0 * p0 * g.q,
            n * q0 * q0 * g.p + (1 - n * p0 * q0) * g.q,
        )

    def curve_forward(self, g: TorusFoliation) -> TorusFoliation:
        p0, q0 = self._pq()
        n = self.n
        return TorusFoliation(
            (1 - n * p0 * q0) * g.p + n * p0 * p0 * g.q,
            -n * q0 * q0 * g.p + (1 + n * p0 * q0) * g.q,
        )

    def apply_to_point(self, x: TorusPoint) -> TorusPoint:
        return TorusPoint(self.point_map(x.tau))


def dehn_twist(f: TorusFoliation, n: int) -> DehnTwist:
    """Parabolic twist data along a primitive integer slope.

    For f = (1, 0) the point action is tau -> tau - n and the slope action is
    (r, s) -> (r - n s, s).
    """
    if not f.is_simple_closed_curve:
        raise ValueError("Dehn twist needs a primitive integer slope pair")
    p0, q0 = round(f.p), round(f.q)
    a = 1.0 - n * p0 * q0
    b = -float(n * p0 * p0)
    c = float(n * q0 * q0)
    d = 1.0 + n * p0 * q0
    return DehnTwist(TorusFoliation(float(p0), float(q0)), n, MoebiusMap(a, b, c, d))


# ---------------------------------------------------------------------------
# disc coordinates and the two flows


def boundary_point(f: TorusFoliation) -> float:
    """Boundary direction whose horocycles carry the flow: -p/q, or inf if q = 0."""
    if f.q == 0.0:
        return INFINITY
    return -f.p / f.q


def disc_embed(x: TorusPoint, f: TorusFoliation) -> MoebiusMap:
    """Möbius map g with g(i) = tau_x, g(inf) = boundary_point(f).

    These two conditions already force Ext_{g(z)}(f) = Ext_x(f) / im(z), the
    profile that makes the vertical flow contract Ext by e^{-t}.  Depends on
    f only through its projective class.
    """
    re, im = x.tau.re, x.tau.im
    b = boundary_point(f)
    if math.isinf(b):
        return MoebiusMap(im, re, 0.0, 1.0)
    r = (re - b) / im
    m = im * (1.0 + r * r)
    return MoebiusMap(b, -b * r - m, 1.0, -r)


def ray_point(x: TorusPoint, f: TorusFoliation, t: float) -> TorusPoint:
    """Point at distance t along the geodesic from x toward boundary_point(f).

    Contracts: ext_length(ray_point(x, f, t), f) = e^{-t} ext_length(x, f).
    """
    g = disc_embed(x, f)
    return TorusPoint(g(HalfPlanePoint(0.0, math.exp(t))))


def mf1_normalize(base: TorusPoint, f: TorusFoliation) -> TorusFoliation:
    """Rescale f so its extremal length at the base point is 1."""
    return f.scaled(1.0 / math.sqrt(ext_length(base, f)))


def horo_point(x: TorusPoint, base: TorusPoint, f: TorusFoliation, s: float) -> TorusPoint:
    """Horocyclic deformation of x directed by f, at time s.

    f is first rescaled so Ext_base(f) = 1; the flow is then the parabolic
    slide along the horocycle through x based at boundary_point(f), moving by
    -s * ext_length(x, f_normalized) in disc coordinates.  With that
    normalization integer times realize Dehn twists along integer slopes.
    """
    fn = mf1_normalize(base, f)
    g = disc_embed(x, fn)
    disp = s * ext_length(x, fn)
    return TorusPoint(g(HalfPlanePoint(-disp, 1.0)))


def horo_connect(x: TorusPoint, y: TorusPoint) -> tuple[TorusFoliation, float]:
    """The unique direction in MF1 and positive time with horo_point(x,...) = y.

    The admissible boundary points solve |tau_y - b|^2 im(tau_x) =
    |tau_x - b|^2 im(tau_y) (b = inf counts when the heights agree); exactly
    one of the at-most-two roots yields s > 0.
    """
    zx, zy = x.as_complex(), y.as_complex()
    if abs(zx - zy) <= 1e-15 * max(1.0, abs(zx)):
        raise ValueError("no deformation needed: the points coincide")

    ix, iy = zx.imag, zy.imag
    qa = ix - iy
    qb = -2.0 * (zy.real * ix - zx.real * iy)
    qc = (abs(zy) ** 2) * ix - (abs(zx) ** 2) * iy

    candidates: list[float] = []
    if abs(qa) <= 1e-13 * max(abs(qb), abs(qc), 1.0):
        candidates.append(INFINITY)
        if qb != 0.0:
            candidates.append(-qc / qb)
    else:
        disc = qb * qb - 4.0 * qa * qc
        if disc >= 0.0:
            root = math.sqrt(disc)
            candidates.append((-qb + root) / (2.0 * qa))
            candidates.append((-qb - root) / (2.0 * qa))

    solutions: list[tuple[TorusFoliation, float]] = []
    for b in candidates:
        f = TorusFoliation(1.0, 0.0) if math.isinf(b) else TorusFoliation(-b, 1.0)
        fn = mf1_normalize(BASE_POINT, f)
        g = disc_embed(x, fn)
        z = g.inverse().apply_complex(zy)
        if abs(z.imag - 1.0) > 1e-8 * max(1.0, abs(z)):
            continue
        s = -z.real / ext_length(x, fn)
        if s > 0.0:
            solutions.append((fn, s))
    if len(solutions) != 1:
        raise ValueError(f"expected exactly one positive-time direction, found {len(solutions)}")
    return solutions[0]


# ---------------------------------------------------------------------------
# convergence experiments


@dataclass(frozen=True)
class FlowRow:
    t: float
    dist_to_base: float
    proj_dist: float


def converge_experiment(
    kind: str,
    f: TorusFoliation,
    base: TorusPoint,
    times: list[float],
    sample: list[TorusFoliation],
    depth: int = DEFAULT_DEPTH,
) -> list[FlowRow]:
    """Projective distance of the sampled boundary functional to i(f, .) along a flow.

    ``kind`` selects the geodesic ray or the horocyclic flow from the base
    point.  Errors out if the whole sample is parallel to f (zero target).
    """
    if kind not in ("ray", "horo"):
        raise ValueError(f"kind must be 'ray' or 'horo', got {kind!r}")
    if not times or any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("times must be strictly increasing and nonempty")
    target = intersection_vector(f, sample)  # raises if identically zero
    rows = []
    for t in times:
        point = ray_point(base, f, t) if kind == "ray" else horo_point(base, base, f, t)
        v = gm_vector(point, base, sample, depth)
        rows.append(
            FlowRow(
                t=t,
                dist_to_base=hyp_distance(base.tau, point.tau),
                proj_dist=projective_distance(v, target),
            )
        )
    return rows


def default_sample(count: int = 20) -> list[TorusFoliation]:
    """First ``count`` slopes in Stern-Brocot order, as a reusable sample set."""
    ps, qs = primitive_slopes(6)
    if count > len(ps):
        raise ValueError("sample larger than enumeration")
    return [TorusFoliation(float(p), float(q)) for p, q in zip(ps[:count], qs[:count])]
