"""Potential and line-integral tests against quadrature oracles."""
import math
import random

import numpy as np
import pytest

from geodlab.hypgeom import (BASEPOINT, GeodesicSegment, Isometry, Point,
                             analyze_isometry, dist)
from geodlab.potential import (PotentialField, PotentialSpec, RadialBump,
                               eval_potential, line_integral,
                               orbital_integrals, period_integral)


@pytest.fixture(scope="module")
def bump_field(pair_db):
    spec = PotentialSpec(terms=(RadialBump(Point(0.0, 1.0), 0.7, 1.2),))
    return PotentialField(spec, pair_db)


def test_spec_algebra():
    s = PotentialSpec.constant(2.0) + PotentialSpec.constant(0.5)
    assert s.is_constant and abs(s.constant_part - 2.5) < 1e-12
    b = PotentialSpec(terms=(RadialBump(BASEPOINT, 1.0, 1.0),))
    assert not b.is_constant
    scaled = b.scaled_bumps(3.0)
    assert scaled.terms[0].height == 3.0


def test_constant_line_integral_exact(pair_db):
    fld = PotentialField(PotentialSpec.constant(0.4), pair_db)
    rng = random.Random(3)
    for _ in range(50):
        x = Point(rng.uniform(-3, 3), math.exp(rng.uniform(-1, 1)))
        y = Point(rng.uniform(-3, 3), math.exp(rng.uniform(-1, 1)))
        assert abs(line_integral(fld, x, y) - 0.4 * dist(x, y)) < 1e-12


def test_bump_values(bump_field):
    # height at the center, zero outside the support, smooth decay between
    assert abs(eval_potential(bump_field, Point(0.0, 1.0)) - 0.7) < 1e-9
    far = Point(8.0, 1.0)
    assert eval_potential(bump_field, far) == 0.0
    mid = Point(0.0, math.exp(0.6))
    v = eval_potential(bump_field, mid)
    assert 0.0 < v < 0.7


def test_line_integral_vs_dense_riemann_oracle(bump_field):
    x = Point(-2.0, 0.5)
    y = Point(3.0, 2.0)
    seg = GeodesicSegment(x, y)
    n = 40000
    ts = np.linspace(0.0, seg.length, n + 1)
    vals = np.array([eval_potential(bump_field, seg.eval(float(t))) for t in ts])
    oracle = float(np.trapezoid(vals, ts))
    assert abs(line_integral(bump_field, x, y, step=0.01) - oracle) < 1e-5


def test_line_integral_additivity(bump_field):
    x = Point(-2.0, 0.5)
    y = Point(3.0, 2.0)
    seg = GeodesicSegment(x, y)
    mid = seg.eval(seg.length * 0.37)
    whole = line_integral(bump_field, x, y, step=0.005)
    parts = (line_integral(bump_field, x, mid, step=0.005)
             + line_integral(bump_field, mid, y, step=0.005))
    assert abs(whole - parts) < 1e-7


def test_quotient_field_translate_invariance(pair_db, bump_field):
    # the field is built from ball translates, so applying a short group
    # element must leave values unchanged away from the truncation shell
    g = pair_db.presentation.letter_matrix(1)
    rng = random.Random(5)
    for _ in range(20):
        p = Point(rng.uniform(-1, 1), math.exp(rng.uniform(-0.5, 0.5)))
        q = g.apply(p)
        assert abs(eval_potential(bump_field, p)
                   - eval_potential(bump_field, q)) < 1e-9


def test_orbital_integrals_constant(pair_db):
    fld = PotentialField(PotentialSpec.constant(0.25), pair_db)
    w = orbital_integrals(fld, pair_db)
    assert np.allclose(w, 0.25 * pair_db.distances, atol=1e-12)


def test_period_integral_constant_and_power(pair_db, bump_field):
    g = pair_db.presentation.word_matrix((1, 2))
    cls, _ = analyze_isometry(g)
    cfld = PotentialField(PotentialSpec.constant(0.3), pair_db)
    assert abs(period_integral(cfld, g) - 0.3 * cls.translation_length) < 1e-12
    # the square of g runs the same closed curve twice
    g2 = g @ g
    one = period_integral(bump_field, g, step=0.005)
    two = period_integral(bump_field, g2, step=0.005)
    assert abs(two - 2.0 * one) < 1e-6
