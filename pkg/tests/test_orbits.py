"""Periodic-orbit census mechanics: lengths, period integrals, ball-time
measurements, return counts, and the binned growth estimators."""
import math

import pytest

from geodlab.hypgeom import translation_length
from geodlab.orbits import (build_periodic_orbits, fill_period_integrals,
                            gurevic_pressure, gurevic_pressure_at_infinity,
                            nk_saturated, return_count_nk, time_in_compact,
                            weighted_excursion_sum)
from geodlab.potential import PotentialField, PotentialSpec
from geodlab.pressure import MINUS_INF


def test_census_sorted_and_primitive(pair_census):
    lengths = [o.length for o in pair_census.orbits]
    assert lengths == sorted(lengths)
    assert all(o.primitive for o in pair_census.orbits)
    assert all(o.length <= pair_census.max_len + 1e-9 for o in pair_census.orbits)


def test_census_lengths_match_matrices(pair_census):
    for orb in pair_census.orbits[:50]:
        assert abs(translation_length(orb.matrix) - orb.length) < 1e-9


def test_period_integral_constant_fill(pair_census, pair_db):
    fld = PotentialField(PotentialSpec.constant(0.5), pair_db)
    fill_period_integrals(pair_census, fld, "c")
    for orb in pair_census.orbits[:20]:
        assert abs(orb.period_f["c"] - 0.5 * orb.length) < 1e-12


def test_time_in_compact_bounds(pair_census, pair_db):
    for orb in pair_census.orbits[:30]:
        t = time_in_compact(orb, 1.5, pair_db)
        assert 0.0 <= t <= orb.length + 1e-9
    # a generous ball catches the shortest orbit for its whole period
    orb0 = pair_census.orbits[0]
    big = time_in_compact(orb0, orb0.axis_dist + orb0.length + 0.5, pair_db)
    assert abs(big - orb0.length) < 0.05


def test_time_in_compact_monotone_in_R(parab_census, parab_db):
    for orb in parab_census.orbits[:20]:
        t1 = time_in_compact(orb, 0.3, parab_db)
        t2 = time_in_compact(orb, 0.4, parab_db)
        assert t2 >= t1 - 1e-9


def test_return_count_positive_when_meeting_ball(pair_census, pair_db):
    for orb in pair_census.orbits[:20]:
        if time_in_compact(orb, 2.0, pair_db) > 0 and not nk_saturated(orb, 2.0, pair_db):
            assert return_count_nk(orb, 2.0, pair_db) >= 1


def test_gurevic_tracks_full_exponent(pair_census, pair_db, pair_delta):
    est = gurevic_pressure(pair_census, pair_db, None, R=2.0, c=2.0)
    assert abs(est.value - pair_delta.value) <= 0.05


def test_gurevic_infinity_sentinel_on_pair(pair_census, pair_db):
    # convex-cocompact: every orbit through the ball spends a definite
    # fraction of its period there, so the small-excursion filter empties
    est = gurevic_pressure_at_infinity(pair_census, pair_db, None,
                                       R=2.5, alpha=0.1, c=2.0)
    assert est.value == MINUS_INF
    assert est.diagnostics["witness_T"] > 0.0


def test_excursion_sum_reports_bound(pair_census, pair_db, pair_delta):
    rep = weighted_excursion_sum(pair_census, pair_db, None, 2.0, 3.0, 0.2,
                                 delta_full=pair_delta.value, delta_k=MINUS_INF,
                                 c=2.0)
    # pair filter is empty, so the rate is the sentinel and the bound uses
    # the remark fallback alpha * delta + slack
    assert rep.rate == MINUS_INF
    assert abs(rep.bound - (0.2 * pair_delta.value + 0.15)) < 1e-12
    assert rep.rate <= rep.bound
