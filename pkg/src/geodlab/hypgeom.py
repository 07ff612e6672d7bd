"""Hyperbolic plane kernel: upper half-plane model with closed-form distance,
Mobius action, Busemann cocycle, geodesic segments and boundary shadows.

Boundary directions destined for measure work are stored as angles on the
disk-model circle; the Cayley map fixing the conversion sends the base point
i to the disk center.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

# Centralized tolerances.
CLASSIFY_TOL = 1e-9   # trace classification
GEOM_TOL = 1e-9       # geometric identities
DET_TOL = 1e-12       # determinant drift allowed on Isometry

INF = math.inf


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Point:
    """Point of the upper half-plane, y > 0."""
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite point ({self.x}, {self.y})")
        if self.y <= 0:
            raise GeometryError(f"point not in upper half-plane: y={self.y}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @staticmethod
    def from_z(z: complex) -> "Point":
        return Point(z.real, z.imag)


#: canonical base point o = i
BASEPOINT = Point(0.0, 1.0)


@dataclass(frozen=True)
class BoundaryPoint:
    """Boundary point, a real number or the point at infinity.

    The disk-model angle encoding is the argument of (value - i)/(value + i);
    infinity maps to angle 0.
    """
    value: float  # real coordinate, or math.inf for the point at infinity

    @property
    def is_infinity(self) -> bool:
        return math.isinf(self.value)

    @property
    def angle(self) -> float:
        if self.is_infinity:
            return 0.0
        return cmath.phase((self.value - 1j) / (self.value + 1j))

    @staticmethod
    def from_angle(theta: float) -> "BoundaryPoint":
        w = cmath.exp(1j * theta)
        if abs(w - 1.0) < 1e-15:
            return BoundaryPoint(INF)
        z = 1j * (1.0 + w) / (1.0 - w)
        return BoundaryPoint(z.real)


def boundary_angle_of_point(p: Point) -> float:
    """Disk-model angle of the direction of p seen from the disk center."""
    w = (p.z - 1j) / (p.z + 1j)
    return cmath.phase(w)


@dataclass(frozen=True)
class Isometry:
    """Unit-determinant real 2x2 matrix modulo sign (canonical sign: first
    nonzero entry positive)."""
    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        det = self.a * self.d - self.b * self.c
        # drift tolerance is scale-aware: det = a d - b c suffers cancellation
        # of order (entry magnitude)^2 * eps in long products
        scale = max(1.0, self.a * self.a + self.b * self.b
                    + self.c * self.c + self.d * self.d)
        if abs(det - 1.0) > 1e-9 * scale + 1e-9:
            raise GeometryError(f"determinant {det} != 1")
        if det != 1.0 and abs(det - 1.0) < 1e-6:
            # absorb round-off drift from long products; for huge entries the
            # computed det is pure cancellation noise and is left alone
            s = math.sqrt(det)
            object.__setattr__(self, "a", self.a / s)
            object.__setattr__(self, "b", self.b / s)
            object.__setattr__(self, "c", self.c / s)
            object.__setattr__(self, "d", self.d / s)
        # canonical sign
        for entry in (self.a, self.b, self.c, self.d):
            if entry != 0.0:
                if entry < 0.0:
                    object.__setattr__(self, "a", -self.a)
                    object.__setattr__(self, "b", -self.b)
                    object.__setattr__(self, "c", -self.c)
                    object.__setattr__(self, "d", -self.d)
                break

    @staticmethod
    def from_matrix(a, b, c, d, normalize=True) -> "Isometry":
        """Build from any positive-determinant matrix, rescaling to det 1."""
        det = a * d - b * c
        if det <= 0:
            raise GeometryError(f"matrix determinant {det} <= 0")
        if normalize:
            s = math.sqrt(det)
            a, b, c, d = a / s, b / s, c / s, d / s
        return Isometry(float(a), float(b), float(c), float(d))

    @staticmethod
    def identity() -> "Isometry":
        return Isometry(1.0, 0.0, 0.0, 1.0)

    @property
    def trace(self) -> float:
        return self.a + self.d

    def entries(self):
        return (self.a, self.b, self.c, self.d)

    def __matmul__(self, other: "Isometry") -> "Isometry":
        return Isometry(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "Isometry":
        return Isometry(self.d, -self.b, -self.c, self.a)

    def apply(self, p: Point) -> Point:
        z = p.z
        w = (self.a * z + self.b) / (self.c * z + self.d)
        return Point.from_z(w)

    def apply_boundary(self, xi: BoundaryPoint) -> BoundaryPoint:
        if xi.is_infinity:
            if abs(self.c) < 1e-300:
                return BoundaryPoint(INF)
            return BoundaryPoint(self.a / self.c)
        denom = self.c * xi.value + self.d
        if abs(denom) < 1e-300:
            return BoundaryPoint(INF)
        return BoundaryPoint((self.a * xi.value + self.b) / denom)


def dist(p: Point, q: Point) -> float:
    """Hyperbolic distance, cosh d = 1 + |p-q|^2 / (2 y_p y_q)."""
    dx = p.x - q.x
    dy = p.y - q.y
    u = (dx * dx + dy * dy) / (2.0 * p.y * q.y)
    return math.acosh(1.0 + u) if u > 0 else 0.0


def mobius_apply(g: Isometry, p: Point) -> Point:
    return g.apply(p)


@dataclass(frozen=True)
class IsometryClass:
    kind: str                 # identity | elliptic | parabolic | hyperbolic
    translation_length: float


def classify(g: Isometry) -> IsometryClass:
    t = abs(g.trace)
    is_id = (abs(g.a - 1.0) < CLASSIFY_TOL and abs(g.d - 1.0) < CLASSIFY_TOL
             and abs(g.b) < CLASSIFY_TOL and abs(g.c) < CLASSIFY_TOL)
    if is_id:
        return IsometryClass("identity", 0.0)
    if abs(t - 2.0) <= CLASSIFY_TOL:
        # near-parabolic matrices are never promoted to hyperbolic
        return IsometryClass("parabolic", 0.0)
    if t < 2.0:
        return IsometryClass("elliptic", 0.0)
    return IsometryClass("hyperbolic", 2.0 * math.acosh(t / 2.0))


def translation_length(g: Isometry) -> float:
    return classify(g).translation_length


def fixed_points(g: Isometry) -> tuple[BoundaryPoint, BoundaryPoint]:
    """Boundary fixed points of a hyperbolic isometry, (repelling, attracting)."""
    if classify(g).kind != "hyperbolic":
        raise GeometryError("fixed_points requires a hyperbolic isometry")
    tr = g.trace
    s = math.sqrt(tr * tr - 4.0)
    lam_att = (tr + math.copysign(s, tr)) / 2.0
    lam_rep = (tr - math.copysign(s, tr)) / 2.0
    if abs(g.c) > 1e-14:
        att = BoundaryPoint((lam_att - g.d) / g.c)
        rep = BoundaryPoint((lam_rep - g.d) / g.c)
    else:
        # fixed points are infinity and b/(d-a)
        finite = BoundaryPoint(g.b / (g.d - g.a))
        if abs(g.a) > abs(g.d):
            att, rep = BoundaryPoint(INF), finite
        else:
            att, rep = finite, BoundaryPoint(INF)
    return rep, att


def analyze_isometry(g: Isometry):
    """Classification plus, for hyperbolic g, the oriented axis
    (repelling endpoint first, attracting second)."""
    cls = classify(g)
    if cls.kind != "hyperbolic":
        return cls, None
    rep, att = fixed_points(g)
    return cls, GeodesicSegment(rep, att)


def busemann(xi: BoundaryPoint, x: Point, y: Point) -> float:
    """Busemann cocycle: limit of d(x,z) - d(y,z) as z -> xi."""
    if xi.is_infinity:
        return math.log(y.y) - math.log(x.y)
    v = xi.value
    hx = ((x.x - v) ** 2 + x.y ** 2) / x.y
    hy = ((y.x - v) ** 2 + y.y ** 2) / y.y
    return math.log(hx) - math.log(hy)


def _endpoints_through(p: Point, q: Point) -> tuple[float, float]:
    """Boundary endpoints (u, v) of the full geodesic through interior p, q,
    oriented so that walking p -> q goes from u toward v. v may be inf."""
    if abs(p.x - q.x) <= 1e-13 * (1.0 + abs(p.x) + abs(q.x)):
        if q.y >= p.y:
            return p.x, INF
        return INF, p.x
    c = (abs(q.z) ** 2 - abs(p.z) ** 2) / (2.0 * (q.x - p.x))
    r = abs(p.z - c)
    u, v = c - r, c + r
    if q.x < p.x:
        u, v = v, u
    return u, v


def _endpoint_toward(p: Point, xi: BoundaryPoint) -> float:
    """Negative boundary endpoint of the geodesic from interior p toward xi."""
    if xi.is_infinity:
        return p.x
    v = xi.value
    if abs(p.x - v) <= 1e-13 * (1.0 + abs(p.x) + abs(v)):
        return INF
    c = (abs(p.z) ** 2 - v * v) / (2.0 * (p.x - v))
    return 2.0 * c - v


class GeodesicSegment:
    """Oriented geodesic segment/ray/line between two endpoints, each a Point
    or a BoundaryPoint.  Interior points are parametrized by arclength from
    the first endpoint."""

    def __init__(self, p, q):
        self.p = p
        self.q = q
        u, v = self._full_endpoints()
        self._u, self._v = u, v
        # normalizer n with n(u)=0, n(v)=infinity, det 1, mapping the
        # geodesic to the positive imaginary axis
        if math.isinf(v):
            n = Isometry(1.0, -u, 0.0, 1.0)
        elif math.isinf(u):
            n = Isometry(0.0, 1.0, -1.0, v)
        elif u < v:
            s = math.sqrt(v - u)
            n = Isometry(1.0 / s, -u / s, -1.0 / s, v / s)
        else:
            s = math.sqrt(u - v)
            n = Isometry(1.0 / s, -u / s, 1.0 / s, -v / s)
        self._n = n
        self._ninv = n.inverse()
        self._s0 = self._coord(p) if isinstance(p, Point) else -INF
        self._s1 = self._coord(q) if isinstance(q, Point) else INF

    def _full_endpoints(self) -> tuple[float, float]:
        p, q = self.p, self.q
        if isinstance(p, Point) and isinstance(q, Point):
            if abs(p.x - q.x) < 1e-13 and abs(p.y - q.y) < 1e-13:
                raise GeometryError("degenerate segment: equal endpoints")
            return _endpoints_through(p, q)
        if isinstance(p, Point) and isinstance(q, BoundaryPoint):
            return _endpoint_toward(p, q), (q.value if not q.is_infinity else INF)
        if isinstance(p, BoundaryPoint) and isinstance(q, Point):
            u, v = _endpoint_toward(q, p), (p.value if not p.is_infinity else INF)
            return v, u
        # two boundary endpoints
        u = p.value if not p.is_infinity else INF
        v = q.value if not q.is_infinity else INF
        if u == v:
            raise GeometryError("degenerate geodesic: equal boundary endpoints")
        return u, v

    @property
    def endpoints_at_infinity(self) -> tuple[BoundaryPoint, BoundaryPoint]:
        return BoundaryPoint(self._u), BoundaryPoint(self._v)

    def _coord(self, x: Point) -> float:
        w = self._n.apply(x)
        return math.log(abs(w.z))

    @property
    def length(self) -> float:
        return self._s1 - self._s0

    def eval(self, t: float) -> Point:
        """Unit-speed point at arclength t from the first endpoint."""
        if isinstance(self.p, BoundaryPoint):
            raise GeometryError("cannot parametrize from a boundary endpoint")
        if t < -GEOM_TOL or t > self.length + GEOM_TOL:
            raise GeometryError(f"arclength {t} outside [0, {self.length}]")
        s = self._s0 + t
        return self._ninv.apply(Point(0.0, math.exp(s)))

    def eval_abs(self, s: float) -> Point:
        """Point at absolute normalizer coordinate s (log scale on the axis)."""
        return self._ninv.apply(Point(0.0, math.exp(s)))

    def foot_abs(self, x: Point) -> tuple[float, float]:
        """(distance to the full geodesic, absolute coordinate of the foot)."""
        w = self._n.apply(x)
        return math.asinh(abs(w.x) / w.y), math.log(abs(w.z))

    def foot(self, x: Point) -> tuple[float, float]:
        """(distance to the segment, arclength coordinate of the closest
        segment point measured from the first endpoint)."""
        d_geo, s = self.foot_abs(x)
        s_cl = min(max(s, self._s0), self._s1)
        if s_cl == s:
            d = d_geo
        else:
            d = dist(x, self.eval_abs(s_cl))
        return d, s_cl - self._s0

    def distance_to(self, x: Point) -> float:
        return self.foot(x)[0]


def geodesic_eval(seg: GeodesicSegment, t: float) -> Point:
    return seg.eval(t)


def point_segment_distance(p: Point, seg: GeodesicSegment) -> float:
    return seg.distance_to(p)


def segment(p, q) -> GeodesicSegment:
    return GeodesicSegment(p, q)


def shadow_halfangle(d: float, R: float) -> float:
    """Half-angle of the boundary arc shadowed by B(p, R) seen from the disk
    center, where d = dist(center, p): sin(theta) = sinh(R)/sinh(d)."""
    if d <= 0 or R <= 0:
        raise GeometryError("shadow_halfangle needs d > 0 and R > 0")
    if R >= d:
        return math.pi
    return math.asin(min(1.0, math.sinh(R) / math.sinh(d)))
