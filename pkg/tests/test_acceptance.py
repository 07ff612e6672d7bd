"""End-to-end acceptance suite.  Each test prints one PASS/FAIL line with the
measured values before asserting, so the verdicts survive in the log."""
import math
import random
import time

from geodlab.entropy import closed_orbit_measure, katok_estimate, spanning_weight
from geodlab.hypgeom import (BASEPOINT, BoundaryPoint, GeodesicSegment,
                             Isometry, Point, busemann, dist,
                             point_segment_distance, shadow_halfangle,
                             translation_length)
from geodlab.orbits import (fill_period_integrals, gurevic_pressure,
                            gurevic_infinity_grid, weighted_excursion_sum)
from geodlab.potential import (PotentialField, PotentialSpec, RadialBump,
                               orbital_integrals)
from geodlab.presets import parabolic_subgroup_exponent
from geodlab.pressure import (MINUS_INF, combined_stderr, critical_exponent,
                              exponent_at_infinity, perturbation_sweep,
                              restricted_exponent)
from geodlab.psmeasure import build_ps_measure, shadow_mass_check, u_set_mass_decay

from test_hypgeom import random_isometry, random_point


def verdict(num, ok, detail):
    print(f"\nCRITERION {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


# -- 1: full exponent agrees with the closed-orbit growth rate ---------------

def test_criterion_01_exponent_matches_orbit_growth(pair_presentation, pair_db,
                                                    pair_census, pair_delta):
    start = time.monotonic()
    fill_period_integrals(pair_census, PotentialField(PotentialSpec.zero(),
                                                      pair_db), "zero")
    gur0 = gurevic_pressure(pair_census, pair_db, "zero", R=2.0, c=1.0)
    diff0 = abs(pair_delta.value - gur0.value)

    spec = PotentialSpec(terms=(RadialBump(Point(0.0, 1.0), 0.5, 1.0),))
    fld = PotentialField(spec, pair_db)
    w = orbital_integrals(fld, pair_db)
    delta_f = critical_exponent(pair_db, weights=w)
    fill_period_integrals(pair_census, fld, "bump")
    gur_f = gurevic_pressure(pair_census, pair_db, "bump", R=2.0, c=1.0)
    diff_f = abs(delta_f.value - gur_f.value)
    elapsed = time.monotonic() - start

    ok = diff0 <= 0.05 and diff_f <= 0.05 and elapsed <= 300.0
    assert verdict(1, ok,
                   f"zero-potential diff {diff0:.4f}, bump diff {diff_f:.4f}, "
                   f"tol 0.05, {elapsed:.0f}s")


# -- 2: modular lattice calibration ------------------------------------------

def test_criterion_02_modular_exponent(modular_db):
    est = critical_exponent(modular_db, None)
    ok = abs(est.value - 1.0) <= 0.05
    assert verdict(2, ok, f"exponent {est.value:.4f} +- {est.stderr:.4f}, "
                          f"target 1.00 +- 0.05")


# -- 3: convex-cocompact restricted growth dies at large radius --------------

def test_criterion_03_pair_sentinel(pair_db, pair_analyzer):
    rep = exponent_at_infinity(pair_db, None, [1.0, 2.0, 3.0], pair_analyzer)
    last = rep.per_R[-1]
    witness = last.diagnostics.get("witness_T")
    ok = (rep.summary == MINUS_INF and last.is_sentinel
          and witness is not None and witness > 0.0)
    assert verdict(3, ok, f"sentinel at R0=3.0 with empty annuli beyond "
                          f"T*={witness}")


# -- 4: cusp-dominated restricted exponent is the parabolic 1/2 --------------

def test_criterion_04_cusp_exponent(parab_db, parab_analyzer, parab_delta):
    oracle = parabolic_subgroup_exponent(2.5)
    restr = restricted_exponent(parab_db, None, 2.0, parab_analyzer)
    gap = parab_delta.value - restr.value
    err = combined_stderr(parab_delta, restr)
    ok = (abs(restr.value - oracle) <= 0.07 and gap > 0.0 and gap >= 3.0 * err)
    assert verdict(4, ok,
                   f"restricted {restr.value:.4f} vs oracle {oracle:.4f} "
                   f"(tol 0.07); gap {gap:.4f} >= 3x stderr {3 * err:.4f}")


# -- 5: compact-perturbation laws --------------------------------------------

def test_criterion_05_perturbation_sweep(pair_db, pair_analyzer):
    base = PotentialField(PotentialSpec.zero(), pair_db)
    bump = PotentialField(
        PotentialSpec(terms=(RadialBump(Point(0.0, 1.0), 1.0, 0.6),)), pair_db)
    rep = perturbation_sweep(pair_db, base, bump, [-1.0, 0.0, 1.0, 2.0, 5.0],
                             R=1.2, analyzer=pair_analyzer)
    ok = (rep.restricted_invariant and rep.full_nondecreasing
          and rep.discrete_convex and rep.well_inequality)
    assert verdict(5, ok,
                   f"restricted invariant {rep.restricted_invariant}, "
                   f"nondecreasing {rep.full_nondecreasing}, "
                   f"convex {rep.discrete_convex} (tol -0.02), "
                   f"well {rep.well_inequality} (tol +0.03)")


# -- 6: shadow mass ratios show no exponential drift --------------------------

def test_criterion_06_shadow_slope(pair_db, pair_delta):
    s = pair_delta.value + 0.05
    m = build_ps_measure(pair_db, None, s)
    rep = shadow_mass_check(m, R=2.0, d_min=5.0, d_max=10.0)
    ok = -0.07 <= rep.slope <= 0.07
    assert verdict(6, ok, f"log-ratio slope {rep.slope:.4f} "
                          f"+- {rep.slope_stderr:.4f} in [-0.07, 0.07]")


# -- 7: recurrence decay rate tracks the exponent gap -------------------------

def test_criterion_07_recurrence_gap(parab_db, parab_analyzer, parab_delta):
    restr = restricted_exponent(parab_db, None, 2.0, parab_analyzer)
    m = build_ps_measure(parab_db, None, parab_delta.value)
    rep = u_set_mass_decay(m, parab_analyzer, 2.0, 4.0,
                           [float(t) for t in range(5, 15)])
    gap = parab_delta.value - restr.value
    diff = abs(rep.alpha_hat - gap)
    ok = rep.alpha_hat > 0.0 and diff <= 0.1
    assert verdict(7, ok, f"decay rate {rep.alpha_hat:.4f} vs gap {gap:.4f}, "
                          f"diff {diff:.4f} <= 0.1")


# -- 8: orbit-based and geometric at-infinity rates agree ---------------------

def test_criterion_08_at_infinity_rates(parab_census, parab_db,
                                        parab_analyzer):
    summ = gurevic_infinity_grid(parab_census, parab_db, None,
                                 R_grid=[0.3, 0.4], alpha_grid=[0.2, 0.1],
                                 c=2.0)
    geo = restricted_exponent(parab_db, None, 2.0, parab_analyzer)
    diff = abs(summ.corner.value - geo.value)
    ok = not summ.corner.is_sentinel and diff <= 0.1
    assert verdict(8, ok,
                   f"orbit rate {summ.corner.value:.4f} vs geometric "
                   f"{geo.value:.4f} at corner (R=0.4, alpha=0.1), "
                   f"diff {diff:.4f} <= 0.1")


# -- 9: geometry property suite -----------------------------------------------

N_CASES = 10_000


def test_criterion_09_geometry_properties():
    rng = random.Random(97)
    worst = {"cocycle": 0.0, "equivariance": 0.0, "sandwich": 0.0,
             "conjugation": 0.0}

    for _ in range(N_CASES):
        x, y, z = (random_point(rng, 3.0) for _ in range(3))
        xi = BoundaryPoint(rng.uniform(-5.0, 5.0))
        err = abs(busemann(xi, x, y) + busemann(xi, y, z) - busemann(xi, x, z))
        worst["cocycle"] = max(worst["cocycle"], err)

    for _ in range(N_CASES):
        x, y = random_point(rng, 3.0), random_point(rng, 3.0)
        xi = BoundaryPoint(rng.uniform(-5.0, 5.0))
        g = random_isometry(rng)
        err = abs(busemann(g.apply_boundary(xi), g.apply(x), g.apply(y))
                  - busemann(xi, x, y))
        worst["equivariance"] = max(worst["equivariance"], err)

    for _ in range(N_CASES):
        x, y, z = (random_point(rng, 3.0) for _ in range(3))
        if dist(y, z) < 1e-6:
            continue
        seg = GeodesicSegment(y, z)
        lower = dist(y, x) + dist(x, z) - 2.0 * point_segment_distance(x, seg)
        upper = dist(y, x) + dist(x, z)
        err = max(lower - dist(y, z), dist(y, z) - upper, 0.0)
        worst["sandwich"] = max(worst["sandwich"], err)

    for _ in range(N_CASES):
        lam = math.exp(rng.uniform(0.2, 1.5))
        rot = random_isometry(rng)
        g = rot @ Isometry(lam, 0.0, 0.0, 1.0 / lam) @ rot.inverse()
        h = random_isometry(rng)
        err = abs(translation_length(h @ g @ h.inverse())
                  - translation_length(g))
        worst["conjugation"] = max(worst["conjugation"], err)

    shadow_worst = 0.0
    for _ in range(N_CASES):
        d = rng.uniform(0.5, 12.0)
        R = rng.uniform(0.05, min(d - 0.05, 5.0))
        got = shadow_halfangle(d, R)
        oracle = _tangent_ray_halfangle(d, R)
        shadow_worst = max(shadow_worst, abs(got - oracle))

    ok = all(v <= 1e-9 for v in worst.values()) and shadow_worst <= 1e-6
    assert verdict(9, ok,
                   "worst errors: cocycle {cocycle:.2e}, equivariance "
                   "{equivariance:.2e}, sandwich {sandwich:.2e}, conjugation "
                   "{conjugation:.2e} (tol 1e-9); shadow {s:.2e} (tol 1e-6)"
                   .format(s=shadow_worst, **worst))


def _tangent_ray_halfangle(d, R):
    """Bisection oracle: smallest angular offset at which the ray from the
    base direction misses the ball B(p, R), with p at distance d straight up
    the imaginary axis from o."""
    from geodlab.hypgeom import boundary_angle_of_point
    p = Point(0.0, math.exp(d))
    base_angle = boundary_angle_of_point(p)

    def misses(theta):
        xi = BoundaryPoint.from_angle(base_angle + theta)
        ray = GeodesicSegment(BASEPOINT, xi)
        return ray.distance_to(p) > R

    lo, hi = 0.0, math.pi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if misses(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -- 10: entropy estimator sanity ---------------------------------------------

def test_criterion_10_katok_sanity(pair_census, pair_db):
    orb = pair_census.orbits[0]
    mu = closed_orbit_measure(orb.axis, orb.s_base, orb.length, pair_db)
    grid = [2.0, 3.0, 4.0, 5.0]
    base = katok_estimate(mu, 0.9, 0.5, grid)
    cfld = PotentialField(PotentialSpec.constant(0.3), pair_db)
    shifted = katok_estimate(mu, 0.9, 0.5, grid, field_=cfld)
    shift_err = abs(shifted.value - (base.value + 0.3))
    counts = [spanning_weight(mu, 0.9, eps, T=4.0).count
              for eps in (0.25, 0.4, 0.6, 0.9)]
    monotone = all(a >= b for a, b in zip(counts, counts[1:]))
    ok = (abs(base.value) <= 0.05
          and shift_err <= max(base.stderr + shifted.stderr, 1e-9)
          and monotone)
    assert verdict(10, ok,
                   f"entropy {base.value:.4f} (tol 0.05), constant-shift "
                   f"error {shift_err:.2e}, eps-monotone counts {counts}")


# -- 11: excursion-count growth obeys the convex-combination bound ------------

def test_criterion_11_excursion_bound(parab_census, parab_db, parab_analyzer,
                                      parab_delta):
    restr = restricted_exponent(parab_db, None, 2.0, parab_analyzer)
    details = []
    ok = True
    for alpha in (0.1, 0.2):
        rep = weighted_excursion_sum(parab_census, parab_db, None,
                                     R_inner=0.4, R_outer=0.4, alpha=alpha,
                                     delta_full=parab_delta.value,
                                     delta_k=restr.value, c=2.0)
        ok = ok and math.isfinite(rep.rate) and rep.rate <= rep.bound
        details.append(f"alpha {alpha}: rate {rep.rate:.4f} <= "
                       f"bound {rep.bound:.4f}")
    assert verdict(11, ok, "; ".join(details))
