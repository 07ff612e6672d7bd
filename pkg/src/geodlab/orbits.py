"""Periodic-orbit database: lengths, period integrals, time in a compact
ball, return counts, Gurevic pressure and its at-infinity variant, and the
weighted excursion-sum check."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .group import ConjugacyReport, OrbitDatabase, Presentation, conjugacy_classes
from .hypgeom import BASEPOINT, GeodesicSegment, analyze_isometry
from .potential import PotentialField, _integrate_along, _BumpsOnly
from .pressure import (AnnulusTable, ExponentEstimate, InsufficientDataError,
                       MINUS_INF, fit_exponent)


@dataclass
class PeriodicOrbit:
    """A primitive conjugacy class of hyperbolic elements, i.e. an oriented
    closed geodesic."""
    word: tuple[int, ...] | None
    matrix: object                 # Isometry of the class representative
    length: float
    primitive: bool
    axis: GeodesicSegment = None
    s_base: float = 0.0            # absolute axis coordinate of the foot of o
    axis_dist: float = 0.0         # dist(o, axis)
    period_f: dict = field(default_factory=dict)
    time_in_k: dict = field(default_factory=dict)
    nk: dict = field(default_factory=dict)


@dataclass
class OrbitCensus:
    orbits: list[PeriodicOrbit]
    max_len: float
    unresolved: int
    truncation: dict


def build_periodic_orbits(p: Presentation, db: OrbitDatabase,
                          max_len: float) -> OrbitCensus:
    """One record per primitive hyperbolic class with translation length
    <= max_len, sorted by (length, word)."""
    report: ConjugacyReport = conjugacy_classes(p, db, max_len)
    orbits = []
    for cls in report.classes:
        if not cls.primitive:
            continue
        _, axis = analyze_isometry(cls.rep.matrix)
        axis_dist, s_base = axis.foot_abs(BASEPOINT)
        orbits.append(PeriodicOrbit(
            word=cls.rep.word, matrix=cls.rep.matrix, length=cls.length,
            primitive=True, axis=axis, s_base=s_base, axis_dist=axis_dist))
    orbits.sort(key=lambda o: (o.length, o.word if o.word is not None else ()))
    return OrbitCensus(orbits=orbits, max_len=max_len,
                       unresolved=report.unresolved,
                       truncation=dict(db.truncation))


def fill_period_integrals(census: OrbitCensus, field_: PotentialField,
                          key: str, step: float = 0.05):
    """Period integral of the potential for every orbit, cached under `key`."""
    for orb in census.orbits:
        if key in orb.period_f:
            continue
        if field_.spec.is_constant:
            orb.period_f[key] = field_.spec.constant_part * orb.length
        else:
            val = field_.spec.constant_part * orb.length
            val += _integrate_along(_BumpsOnly(field_), orb.axis,
                                    orb.s_base, orb.s_base + orb.length, step)
            orb.period_f[key] = val


def time_in_compact(orb: PeriodicOrbit, R: float, db: OrbitDatabase,
                    step: float = 0.05) -> float:
    """Measure of the set of times in one period at which the orbit's base
    point has quotient distance <= R from o, by arclength sampling."""
    cached = orb.time_in_k.get(R)
    if cached is not None:
        return cached
    n = max(2, int(math.ceil(orb.length / step)))
    ss = orb.s_base + np.linspace(0.0, orb.length, n, endpoint=False)
    xs, ys = _axis_points(orb.axis, ss)
    dq = _quotient_distance(xs, ys, db.points, R)
    val = float(np.count_nonzero(dq <= R)) * (orb.length / n)
    orb.time_in_k[R] = val
    return val


def _axis_points(axis: GeodesicSegment, ss: np.ndarray):
    wy = np.exp(ss)
    al, be, ga, de = axis._ninv.entries()
    den = de * de + ga * ga * wy * wy
    return (be * de + al * ga * wy * wy) / den, wy / den


def _quotient_distance(xs: np.ndarray, ys: np.ndarray, pts: np.ndarray,
                       R: float) -> np.ndarray:
    """min over translate points of hyperbolic distance, with a Euclidean
    box prefilter keyed to the query band (exact for decisions d <= R)."""
    ylo, yhi = ys.min() * math.exp(-R - 0.1), ys.max() * math.exp(R + 0.1)
    reach = math.sqrt(2.0 * yhi * ys.max() * (math.cosh(R + 0.1) - 1.0))
    sel = ((pts[:, 1] >= ylo) & (pts[:, 1] <= yhi)
           & (pts[:, 0] >= xs.min() - reach) & (pts[:, 0] <= xs.max() + reach))
    sub = pts[sel]
    if len(sub) == 0:
        return np.full(xs.shape, np.inf)
    out = np.full(xs.shape, np.inf)
    chunk = max(1, 4_000_000 // len(sub))
    for i in range(0, len(xs), chunk):
        sl = slice(i, i + chunk)
        dx = xs[sl, None] - sub[None, :, 0]
        dy = ys[sl, None] - sub[None, :, 1]
        u = (dx * dx + dy * dy) / (2.0 * ys[sl, None] * sub[None, :, 1])
        out[sl] = np.arccosh(1.0 + np.maximum(u, 0.0)).min(axis=1)
    return out


def return_count_nk(orb: PeriodicOrbit, R: float, db: OrbitDatabase) -> int:
    """Number of conjugates of the class whose axis passes within R of o,
    counted as translate points within R of the axis with foot coordinate in
    one period window (one representative per centralizer coset)."""
    cached = orb.nk.get(R)
    if cached is not None:
        return cached
    pts = db.points
    # absolute foot coordinate on the full axis (the axis has no finite
    # start, so the relative coordinate of segment_foot_array is useless)
    al, be, ga, de = orb.axis._n.entries()
    xs, ys = pts[:, 0], pts[:, 1]
    den = (ga * xs + de) ** 2 + (ga * ys) ** 2
    wx = ((al * xs + be) * (ga * xs + de) + al * ga * ys * ys) / den
    wy = ys / den
    dd = np.arcsinh(np.abs(wx) / wy)
    s_abs = 0.5 * np.log(wx * wx + wy * wy)
    # translates of o can sit exactly on the period boundary; nudge the
    # half-open window so roundoff cannot drop (or double-count) them
    lo = orb.s_base - 1e-9
    near = (dd <= R) & (s_abs >= lo) & (s_abs < lo + orb.length)
    val = int(np.count_nonzero(near))
    orb.nk[R] = val
    return val


def nk_saturated(orb: PeriodicOrbit, R: float, db: OrbitDatabase) -> bool:
    """True when the database may miss conjugators for this orbit."""
    needed = orb.axis_dist + orb.length + R
    return needed > db.horizon


# ---------------------------------------------------------------------------
# Gurevic pressure


def _length_bins(orbits, weights, c: float, horizon: float, member,
                 length_weighted: bool = True) -> AnnulusTable:
    """Per-bin sums of e^{int F} over member orbits.  With length weighting
    each orbit contributes length * e^{int F}: the raw class count per length
    window carries a 1/T prefactor, and weighting by length removes that
    finite-horizon bias from the slope without changing the exponent."""
    bins: dict[int, float] = {}
    counts: dict[int, int] = {}
    for orb, w in zip(orbits, weights):
        if not member(orb):
            continue
        k = int(math.ceil(orb.length / c - 1e-12))
        mult = orb.length if length_weighted else 1.0
        bins[k] = bins.get(k, 0.0) + mult * math.exp(w)
        counts[k] = counts.get(k, 0) + 1
    return AnnulusTable(c=c, bins=bins, counts=counts, horizon=horizon,
                        truncation={"max_len": horizon})


def gurevic_pressure(census: OrbitCensus, db: OrbitDatabase, fkey: str,
                     R: float = 2.0, c: float = 1.0,
                     window_bins: int | None = None,
                     widen: bool = True) -> ExponentEstimate:
    """Weighted exponential growth rate of periodic orbits meeting B(o, R),
    binned by length."""
    orbits = census.orbits
    weights = [orb.period_f.get(fkey, 0.0) for orb in orbits]
    member = lambda orb: time_in_compact(orb, R, db) > 0.0
    tab = _length_bins(orbits, weights, c, census.max_len, member)
    try:
        est = fit_exponent(tab, window_bins)
    except InsufficientDataError:
        if not widen:
            raise
        tab = _length_bins(orbits, weights, 2.0 * c, census.max_len, member)
        est = fit_exponent(tab, window_bins)
        est.diagnostics["widened_bin"] = 2.0 * c
    est.method = "gurevic"
    est.diagnostics.update({"R": R, "orbit_count": len(orbits)})
    return est


def gurevic_pressure_at_infinity(census: OrbitCensus, db: OrbitDatabase,
                                 fkey: str, R: float, alpha: float,
                                 c: float = 1.0,
                                 window_bins: int | None = None) -> ExponentEstimate:
    """Same growth rate restricted to orbits meeting B(o,R) whose time in the
    ball is below the fraction alpha of their period.

    Bins use raw counts here, unlike the full-census estimator.  The
    surviving classes are dominated by single long cusp windings, whose
    per-bin density is already flat in length; adding a length weight would
    push the fitted slope up by roughly log(T)/T at the truncation scale."""
    orbits = census.orbits
    weights = [orb.period_f.get(fkey, 0.0) for orb in orbits]

    def member(orb):
        t = time_in_compact(orb, R, db)
        return 0.0 < t < alpha * orb.length

    tab = _length_bins(orbits, weights, c, census.max_len, member,
                       length_weighted=False)
    empty_from = tab.tail_empty_from()
    if empty_from is not None and census.max_len - empty_from >= 3 * c - 1e-9:
        return ExponentEstimate(
            value=MINUS_INF, stderr=0.0, window=(empty_from, census.max_len),
            method="gurevic-infinity-sentinel", truncation=tab.truncation,
            diagnostics={"witness_T": empty_from, "R": R, "alpha": alpha})
    est = fit_exponent(tab, window_bins)
    est.method = "gurevic-infinity"
    est.diagnostics.update({"R": R, "alpha": alpha})
    return est


@dataclass
class GurevicInfinitySummary:
    grid: list[tuple[float, float, ExponentEstimate]]  # (R, alpha, estimate)
    corner: ExponentEstimate                           # largest R, smallest alpha
    monotone_trend: bool


def gurevic_infinity_grid(census: OrbitCensus, db: OrbitDatabase, fkey: str,
                          R_grid, alpha_grid, c: float = 1.0) -> GurevicInfinitySummary:
    """Double-limit summary: the grid-corner value (largest R, smallest
    alpha) plus a monotone-trend flag; no extrapolation."""
    grid = []
    for R in R_grid:
        for alpha in alpha_grid:
            grid.append((R, alpha,
                         gurevic_pressure_at_infinity(census, db, fkey, R, alpha, c)))
    corner = [e for (R, a, e) in grid
              if R == max(R_grid) and a == min(alpha_grid)][0]
    # per-bin alpha-monotonicity implies estimate monotonicity up to noise
    trend = True
    for R in R_grid:
        vals = [e.value for (r, a, e) in sorted(grid, key=lambda g: g[1])
                if r == R and not e.is_sentinel]
        if any(vals[i + 1] < vals[i] - 0.1 for i in range(len(vals) - 1)):
            trend = False
    return GurevicInfinitySummary(grid=grid, corner=corner, monotone_trend=trend)


# ---------------------------------------------------------------------------
# Excursion counting


@dataclass
class ExcursionReport:
    rate: float
    bound: float
    margin: float
    alpha: float
    nested_ok: bool | None
    diagnostics: dict


def weighted_excursion_sum(census: OrbitCensus, db: OrbitDatabase, fkey: str,
                           R_inner: float, R_outer: float, alpha: float,
                           delta_full: float, delta_k: float,
                           slack: float = 0.15, c: float = 1.0,
                           nested_check: bool = True) -> ExcursionReport:
    """Growth rate of the return-count-weighted excursion sum over orbits
    meeting B(o, R_inner) and spending at most the fraction alpha of their
    period in B(o, R_outer), compared against the convex-combination bound
    (1-alpha) delta_K + alpha delta + slack."""
    orbits = census.orbits

    def member(orb, R_out=R_outer, a=alpha):
        if time_in_compact(orb, R_inner, db) <= 0.0:
            return False
        return time_in_compact(orb, R_out, db) <= a * orb.length

    bins: dict[int, float] = {}
    for orb in orbits:
        if not member(orb):
            continue
        w = orb.period_f.get(fkey, 0.0)
        nk = return_count_nk(orb, R_inner, db)
        if nk == 0:
            nk = 1  # meets the ball, so at least one lift does
        k = int(math.ceil(orb.length / c - 1e-12))
        bins[k] = bins.get(k, 0.0) + nk * math.exp(w)
    tab = AnnulusTable(c=c, bins=bins, counts={k: 1 for k in bins},
                       horizon=census.max_len, truncation=dict(census.truncation))
    if len(tab.complete_bins()) < 5:
        rate = MINUS_INF
    else:
        rate = fit_exponent(tab).value
    if delta_k == MINUS_INF:
        # Remark allowance: an arbitrary real stands in for delta_K
        bound = alpha * delta_full + slack
    else:
        bound = (1.0 - alpha) * delta_k + alpha * delta_full + slack
    nested_ok = None
    if nested_check and R_outer > R_inner + 1e-9:
        # nested-compact comparison: sums over (K, alpha) vs (K', 2 alpha)
        ok = True
        sums_big = _filtered_binsums(orbits, fkey, db, R_outer, alpha, c)
        sums_small = _filtered_binsums(orbits, fkey, db, R_inner, 2.0 * alpha, c)
        for k, v in sums_big.items():
            t = k * c
            mult = 10.0 * max(t, 1.0)  # bounded-multiplicity factor C'' T
            if v > mult * sums_small.get(k, 0.0) + 1e-9 and v > 0:
                ok = False
        nested_ok = ok
    return ExcursionReport(rate=rate, bound=bound, margin=bound - rate,
                           alpha=alpha, nested_ok=nested_ok,
                           diagnostics={"R_inner": R_inner, "R_outer": R_outer,
                                        "bins": {k: v for k, v in sorted(bins.items())}})


def _filtered_binsums(orbits, fkey, db, R, alpha, c):
    out: dict[int, float] = {}
    for orb in orbits:
        t = time_in_compact(orb, R, db)
        if not (0.0 < t < alpha * orb.length):
            continue
        k = int(math.ceil(orb.length / c - 1e-12))
        out[k] = out.get(k, 0.0) + math.exp(orb.period_f.get(fkey, 0.0))
    return out
