"""Geometry kernel unit tests with independent oracles."""
import math
import random

import pytest

from geodlab.hypgeom import (BASEPOINT, BoundaryPoint, GeodesicSegment,
                             GeometryError, Isometry, Point,
                             boundary_angle_of_point, busemann, classify,
                             dist, fixed_points, point_segment_distance,
                             shadow_halfangle, translation_length)

TOL = 1e-9


def random_point(rng, span=5.0):
    return Point(rng.uniform(-span, span), math.exp(rng.uniform(-2.0, 2.0)))


def random_isometry(rng):
    # product of a rotation-like elliptic, a diagonal, and a translation
    t = rng.uniform(-1.5, 1.5)
    s = math.exp(rng.uniform(-1.0, 1.0))
    th = rng.uniform(0.0, math.pi)
    trans = Isometry(1.0, t, 0.0, 1.0)
    diag = Isometry(s, 0.0, 0.0, 1.0 / s)
    rot = Isometry(math.cos(th), math.sin(th), -math.sin(th), math.cos(th))
    return trans @ diag @ rot


def test_dist_vertical_axis_exact():
    for t in (0.1, 1.0, 2.5, 7.0):
        assert abs(dist(BASEPOINT, Point(0.0, math.exp(t))) - t) < TOL


def test_dist_symmetry_and_triangle():
    rng = random.Random(7)
    for _ in range(500):
        p, q, r = (random_point(rng) for _ in range(3))
        assert abs(dist(p, q) - dist(q, p)) < TOL
        assert dist(p, r) <= dist(p, q) + dist(q, r) + TOL


def test_dist_isometry_invariance():
    rng = random.Random(11)
    for _ in range(500):
        p, q = random_point(rng), random_point(rng)
        g = random_isometry(rng)
        assert abs(dist(g.apply(p), g.apply(q)) - dist(p, q)) < 1e-8


def test_isometry_group_laws():
    rng = random.Random(13)
    for _ in range(200):
        g, h = random_isometry(rng), random_isometry(rng)
        p = random_point(rng)
        lhs = (g @ h).apply(p)
        rhs = g.apply(h.apply(p))
        assert abs(lhs.x - rhs.x) < 1e-9 and abs(lhs.y - rhs.y) < 1e-9
        back = g.inverse().apply(g.apply(p))
        assert abs(back.x - p.x) < 1e-9 and abs(back.y - p.y) < 1e-9


def test_classify_known_matrices():
    assert classify(Isometry.identity()).kind == "identity"
    assert classify(Isometry(1.0, 1.0, 0.0, 1.0)).kind == "parabolic"
    lam = math.exp(0.5)
    g = Isometry(lam, 0.0, 0.0, 1.0 / lam)
    cls = classify(g)
    assert cls.kind == "hyperbolic"
    assert abs(cls.translation_length - 1.0) < TOL
    rot = Isometry(math.cos(0.3), math.sin(0.3), -math.sin(0.3), math.cos(0.3))
    assert classify(rot).kind == "elliptic"


def test_translation_length_equals_min_displacement():
    # displacement at the axis realizes the translation length
    lam = math.exp(0.8)
    g = Isometry(lam, 0.0, 0.0, 1.0 / lam)
    on_axis = Point(0.0, 5.0)
    assert abs(dist(on_axis, g.apply(on_axis)) - 1.6) < TOL
    off_axis = Point(3.0, 5.0)
    assert dist(off_axis, g.apply(off_axis)) > 1.6


def test_fixed_points_diagonal():
    lam = math.exp(0.7)
    rep, att = fixed_points(Isometry(lam, 0.0, 0.0, 1.0 / lam))
    assert att.is_infinity
    assert abs(rep.value) < TOL


def test_busemann_matches_limit_definition():
    rng = random.Random(17)
    for _ in range(100):
        x, y = random_point(rng, 2.0), random_point(rng, 2.0)
        xi = BoundaryPoint(rng.uniform(-4.0, 4.0))
        ray = GeodesicSegment(x, xi)
        z = ray.eval(35.0)
        approx = dist(x, z) - dist(y, z)
        assert abs(busemann(xi, x, y) - approx) < 1e-6


def test_segment_parametrization_unit_speed():
    rng = random.Random(19)
    for _ in range(200):
        p, q = random_point(rng), random_point(rng)
        if dist(p, q) < 0.2:
            continue
        seg = GeodesicSegment(p, q)
        assert abs(seg.length - dist(p, q)) < TOL
        t = rng.uniform(0.0, seg.length)
        m = seg.eval(t)
        assert abs(dist(p, m) - t) < 1e-8
        assert abs(dist(m, q) - (seg.length - t)) < 1e-8


def test_point_segment_distance_vs_dense_sampling():
    rng = random.Random(23)
    for _ in range(50):
        p, q, x = random_point(rng), random_point(rng), random_point(rng)
        if dist(p, q) < 0.2:
            continue
        seg = GeodesicSegment(p, q)
        d = point_segment_distance(x, seg)
        n = 4000
        best = min(dist(x, seg.eval(seg.length * k / n)) for k in range(n + 1))
        assert d <= best + 1e-9
        assert best - d < 1e-5  # dense sampling converges to the true foot


def test_boundary_angle_round_trip():
    rng = random.Random(29)
    for _ in range(300):
        v = rng.uniform(-30.0, 30.0)
        xi = BoundaryPoint(v)
        back = BoundaryPoint.from_angle(xi.angle)
        assert abs(back.value - v) < 1e-8 * max(1.0, abs(v))


def test_shadow_halfangle_degenerate_cases():
    assert shadow_halfangle(1.0, 2.0) == math.pi
    with pytest.raises(GeometryError):
        shadow_halfangle(0.0, 1.0)
    with pytest.raises(GeometryError):
        shadow_halfangle(1.0, -1.0)


def test_point_validation():
    with pytest.raises(GeometryError):
        Point(0.0, -1.0)
    with pytest.raises(GeometryError):
        Point(math.nan, 1.0)


def test_isometry_determinant_validation():
    with pytest.raises(GeometryError):
        Isometry(2.0, 0.0, 0.0, 1.0)
