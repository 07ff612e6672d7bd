"""Gamma-invariant potentials on the base surface and their line/period
integrals along geodesics.

Potentials are fiber-constant (they depend on the base point only); the
quotient distance is computed by minimizing over a truncated set of orbit
translates, which overestimates the true distance one-sidedly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hypgeom import (
    BASEPOINT,
    GeodesicSegment,
    GeometryError,
    Isometry,
    Point,
    analyze_isometry,
    dist,
)

DEFAULT_STEP = 0.01  # quadrature step, hyperbolic units


@dataclass(frozen=True)
class Constant:
    value: float


@dataclass(frozen=True)
class RadialBump:
    """C^1 bump of given height supported in quotient distance < radius of the
    center lift; profile is the cubic smoothstep 1 - 3u^2 + 2u^3."""
    center: Point
    height: float
    radius: float

    @property
    def lipschitz(self) -> float:
        # max |profile'| = 3/2 over [0,1], scaled by 1/radius
        return abs(self.height) * 1.5 / self.radius


@dataclass(frozen=True)
class RadialSlope:
    """Linear in quotient distance from the anchor, capped so F stays bounded."""
    anchor: Point
    slope: float
    cap: float

    def __post_init__(self):
        if self.cap <= 0:
            raise ValueError("cap must be positive")


Term = Constant | RadialBump | RadialSlope


@dataclass(frozen=True)
class PotentialSpec:
    """Sum of fiber-constant terms; Zero is the empty term list."""
    terms: tuple[Term, ...] = ()
    translate_cutoff: float = math.inf  # distance bound for translate caches

    @staticmethod
    def zero() -> "PotentialSpec":
        return PotentialSpec(())

    @staticmethod
    def constant(c: float) -> "PotentialSpec":
        return PotentialSpec((Constant(c),))

    @property
    def constant_part(self) -> float:
        return sum(t.value for t in self.terms if isinstance(t, Constant))

    @property
    def is_constant(self) -> bool:
        return all(isinstance(t, Constant) for t in self.terms)

    def scaled_bumps(self, lam: float) -> "PotentialSpec":
        """Spec with every non-constant term height/slope multiplied by lam."""
        terms = []
        for t in self.terms:
            if isinstance(t, Constant):
                terms.append(Constant(t.value * lam))
            elif isinstance(t, RadialBump):
                terms.append(RadialBump(t.center, t.height * lam, t.radius))
            else:
                terms.append(RadialSlope(t.anchor, t.slope * lam, t.cap))
        return PotentialSpec(tuple(terms), self.translate_cutoff)

    def __add__(self, other: "PotentialSpec") -> "PotentialSpec":
        return PotentialSpec(self.terms + other.terms,
                             max(self.translate_cutoff, other.translate_cutoff))


def _point_array(p: Point) -> np.ndarray:
    return np.array([[p.x, p.y]])


def _dist_matrix(xs: np.ndarray, ys: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Hyperbolic distances, shape (len(xs), len(pts))."""
    dx = xs[:, None] - pts[None, :, 0]
    dy = ys[:, None] - pts[None, :, 1]
    u = (dx * dx + dy * dy) / (2.0 * ys[:, None] * pts[None, :, 1])
    return np.arccosh(1.0 + np.maximum(u, 0.0))


class QuotientDistanceField:
    """min over cached translates g.anchor of dist(x, g.anchor); 1-Lipschitz
    and monotone nonincreasing as the translate set grows."""

    def __init__(self, anchor: Point, translate_mats: np.ndarray):
        self.anchor = anchor
        a, b, c, d = (translate_mats[:, 0], translate_mats[:, 1],
                      translate_mats[:, 2], translate_mats[:, 3])
        z = complex(anchor.x, anchor.y)
        den = (c * anchor.x + d) ** 2 + (c * anchor.y) ** 2
        px = ((a * anchor.x + b) * (c * anchor.x + d) + a * c * anchor.y ** 2) / den
        py = anchor.y / den
        self.translates = np.stack([px, py], axis=1)

    def eval_array(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        out = np.full(xs.shape, np.inf)
        chunk = max(1, 4_000_000 // max(1, len(self.translates)))
        for i in range(0, len(xs), chunk):
            sl = slice(i, i + chunk)
            out[sl] = _dist_matrix(xs[sl], ys[sl], self.translates).min(axis=1)
        return out

    def eval(self, p: Point) -> float:
        return float(self.eval_array(np.array([p.x]), np.array([p.y]))[0])


class PotentialField:
    """PotentialSpec bound to a truncated translate cache from an orbit
    database; evaluation is exactly Gamma-invariant on the cached translates."""

    def __init__(self, spec: PotentialSpec, db):
        self.spec = spec
        self.db = db
        sel = db.distances <= spec.translate_cutoff
        mats = db.matrices[sel]
        self._fields = {}
        for t in spec.terms:
            if isinstance(t, Constant):
                continue
            anchor = t.center if isinstance(t, RadialBump) else t.anchor
            key = (anchor.x, anchor.y)
            if key not in self._fields:
                self._fields[key] = QuotientDistanceField(anchor, mats)

    def _field_for(self, term) -> QuotientDistanceField:
        anchor = term.center if isinstance(term, RadialBump) else term.anchor
        return self._fields[(anchor.x, anchor.y)]

    def eval_array(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self.spec.constant_part + self.eval_bumps_array(xs, ys)

    def eval_bumps_array(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Non-constant terms only."""
        out = np.zeros(xs.shape, dtype=float)
        for t in self.spec.terms:
            if isinstance(t, Constant):
                continue
            dq = self._field_for(t).eval_array(xs, ys)
            if isinstance(t, RadialBump):
                u = np.clip(dq / t.radius, 0.0, 1.0)
                out += t.height * (1.0 - 3.0 * u * u + 2.0 * u ** 3)
            else:
                reach = t.cap / abs(t.slope) if t.slope != 0 else 0.0
                out += t.slope * np.minimum(dq, reach)
        return out

    def eval(self, p: Point) -> float:
        return float(self.eval_array(np.array([p.x]), np.array([p.y]))[0])


def eval_potential(field: PotentialField, x: Point) -> float:
    return field.eval(x)


def _segment_eval_abs(seg: GeodesicSegment, ss: np.ndarray):
    """Vectorized evaluation at absolute normalizer coordinates."""
    wy = np.exp(ss)
    al, be, ga, de = seg._ninv.entries()
    den = de * de + ga * ga * wy * wy
    x = (be * de + al * ga * wy * wy) / den
    y = wy / den
    return x, y


def segment_foot_array(seg: GeodesicSegment, xs: np.ndarray, ys: np.ndarray):
    """Vectorized (distance, arclength-from-start) to a segment."""
    al, be, ga, de = seg._n.entries()
    den = (ga * xs + de) ** 2 + (ga * ys) ** 2
    wx = ((al * xs + be) * (ga * xs + de) + al * ga * ys * ys) / den
    wy = ys / den
    s = 0.5 * np.log(wx * wx + wy * wy)
    s_cl = np.clip(s, seg._s0, seg._s1)
    inside = s_cl == s
    d = np.empty_like(xs)
    d[inside] = np.arcsinh(np.abs(wx[inside]) / wy[inside])
    if not inside.all():
        out = ~inside
        ex, ey = _segment_eval_abs(seg, s_cl[out])
        u = ((xs[out] - ex) ** 2 + (ys[out] - ey) ** 2) / (2.0 * ys[out] * ey)
        d[out] = np.arccosh(1.0 + np.maximum(u, 0.0))
    return d, s_cl - seg._s0


def line_integral(field: PotentialField, x: Point, y: Point,
                  step: float = DEFAULT_STEP) -> float:
    """Composite Simpson of the potential along the geodesic [x, y]."""
    if step <= 0:
        raise ValueError("step must be positive")
    length = dist(x, y)
    if length == 0.0:
        return 0.0
    if field.spec.is_constant:
        return field.spec.constant_part * length
    seg = GeodesicSegment(x, y)
    return _integrate_along(field, seg, seg._s0, seg._s1, step)


def _integrate_along(field: PotentialField, seg: GeodesicSegment,
                     s0: float, s1: float, step: float) -> float:
    """Composite Simpson over absolute coordinates [s0, s1] (unit speed)."""
    length = s1 - s0
    n = max(2, 2 * int(math.ceil(length / (2.0 * step))))
    ts = np.linspace(s0, s1, n + 1)
    xs, ys = _segment_eval_abs(seg, ts)
    vals = field.eval_array(xs, ys)
    h = length / n
    weights = np.ones(n + 1)
    weights[1:-1:2] = 4.0
    weights[2:-1:2] = 2.0
    return float(h / 3.0 * np.dot(weights, vals))


def orbital_integrals(field: PotentialField, db, step: float = 0.05) -> np.ndarray:
    """Integral of the potential along [o, gamma o] for every database
    element, in database order.  The coarser default step is adequate here:
    quadrature error stays far below the statistical error of exponent fits.

    Compactly supported terms use an exact candidate restriction: a translate
    center farther than the support radius from the whole segment contributes
    nothing at any sample point, and by the triangle inequality through its
    closest segment point such a center has detour
    d(o, p) + d(p, gamma o) - d(o, gamma o) > 2 * radius.  Filtering on the
    detour keeps per-element evaluation small on large databases.
    """
    d = db.distances
    out = field.spec.constant_part * d
    if field.spec.is_constant:
        return out
    pts = db.points
    compact = all(isinstance(t, (Constant, RadialBump)) for t in field.spec.terms)
    if not compact:
        bumps = _BumpsOnly(field)
        for i in range(len(db)):
            if d[i] == 0.0:
                continue
            seg = GeodesicSegment(BASEPOINT, Point(pts[i, 0], pts[i, 1]))
            out[i] += _integrate_along(bumps, seg, seg._s0, seg._s1, step)
        return out

    reach = {}
    for t in field.spec.terms:
        if isinstance(t, RadialBump):
            key = (t.center.x, t.center.y)
            reach[key] = max(reach.get(key, 0.0), t.radius)
    centers = {key: field._fields[key].translates for key in reach}
    base_d = {key: _dist_matrix(np.array([BASEPOINT.x]),
                                np.array([BASEPOINT.y]), tr)[0]
              for key, tr in centers.items()}
    for i in range(len(db)):
        if d[i] == 0.0:
            continue
        subsets = {}
        any_cand = False
        for key, tr in centers.items():
            end_d = _dist_matrix(pts[i:i + 1, 0], pts[i:i + 1, 1], tr)[0]
            cand = (base_d[key] + end_d - d[i]) <= 2.0 * reach[key] + 1e-9
            subsets[key] = tr[cand]
            any_cand = any_cand or cand.any()
        if not any_cand:
            continue
        seg = GeodesicSegment(BASEPOINT, Point(pts[i, 0], pts[i, 1]))
        out[i] += _integrate_along(_CandidateBumps(field.spec, subsets),
                                   seg, seg._s0, seg._s1, step)
    return out


class _CandidateBumps:
    """Bump-only evaluation against a restricted translate set; exact on
    points of the segment the restriction was built for."""

    def __init__(self, spec: PotentialSpec, subsets: dict):
        self._spec = spec
        self._subsets = subsets

    def eval_array(self, xs, ys):
        out = np.zeros(xs.shape, dtype=float)
        for t in self._spec.terms:
            if isinstance(t, Constant):
                continue
            tr = self._subsets[(t.center.x, t.center.y)]
            if len(tr) == 0:
                continue
            dq = _dist_matrix(xs, ys, tr).min(axis=1)
            u = np.clip(dq / t.radius, 0.0, 1.0)
            out += t.height * (1.0 - 3.0 * u * u + 2.0 * u ** 3)
        return out


class _BumpsOnly:
    def __init__(self, field: PotentialField):
        self._field = field

    def eval_array(self, xs, ys):
        return self._field.eval_bumps_array(xs, ys)


def period_integral(field: PotentialField, g: Isometry,
                    step: float = DEFAULT_STEP) -> float:
    """Integral of the potential over one period of the closed geodesic of a
    hyperbolic isometry, along its axis."""
    cls, axis = analyze_isometry(g)
    if cls.kind != "hyperbolic":
        raise GeometryError("period_integral requires a hyperbolic isometry")
    ell = cls.translation_length
    if field.spec.is_constant:
        return field.spec.constant_part * ell
    # base point: foot of the basepoint on the axis (any base point works,
    # within quadrature tolerance)
    _, s_foot = axis.foot_abs(BASEPOINT)
    return _integrate_along(field, axis, s_foot, s_foot + ell, step)
