"""Annulus sums, critical exponents, restricted exponents outside a compact
set, pressure at infinity, and compact-perturbation sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .group import OrbitDatabase
from .hypgeom import BASEPOINT, GeodesicSegment, Point
from .potential import PotentialField, PotentialSpec, orbital_integrals, segment_foot_array

MINUS_INF = -math.inf


class InsufficientDataError(RuntimeError):
    pass


class HorizonError(RuntimeError):
    pass


@dataclass
class AnnulusTable:
    """Q_t = sum over elements with d_o in (t-c, t] of e^{int F}; bins beyond
    the completeness horizon are flagged incomplete and excluded from fits."""
    c: float
    bins: dict[int, float]          # k -> Q over ((k-1)c, kc]
    counts: dict[int, int]
    horizon: float
    truncation: dict

    def complete_bins(self):
        """(t, Q) pairs for bins entirely inside the horizon, Q > 0."""
        out = []
        for k in sorted(self.bins):
            t = k * self.c
            if t <= self.horizon and self.bins[k] > 0.0:
                out.append((t, self.bins[k]))
        return out

    def tail_empty_from(self):
        """Start of the trailing run of empty complete bins, or None."""
        kmax = int(math.floor(self.horizon / self.c))
        empty_start = None
        for k in range(1, kmax + 1):
            if self.bins.get(k, 0.0) == 0.0:
                if empty_start is None:
                    empty_start = k * self.c
            else:
                empty_start = None
        return empty_start


@dataclass
class ExponentEstimate:
    value: float
    stderr: float
    window: tuple[float, float]
    method: str
    truncation: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_sentinel(self) -> bool:
        return self.value == MINUS_INF


def combined_stderr(a: ExponentEstimate, b: ExponentEstimate) -> float:
    return math.hypot(a.stderr, b.stderr)


def annulus_sums(db: OrbitDatabase, weights: np.ndarray | None = None,
                 c: float = 1.0, member_mask: np.ndarray | None = None,
                 horizon: float | None = None) -> AnnulusTable:
    """Exact bin sums over stored elements.  `weights` are per-element
    potential integrals (zero for F = 0); summation is compensated over the
    canonical element order, so results are reproducible."""
    if c <= 0:
        raise ValueError("bin width must be positive")
    d = db.distances
    if weights is None:
        weights = np.zeros(len(d))
    sel = np.ones(len(d), dtype=bool) if member_mask is None else member_mask.copy()
    sel &= d > 0  # identity excluded from growth bins
    ks = np.ceil(d / c - 1e-12).astype(int)
    bins: dict[int, float] = {}
    counts: dict[int, int] = {}
    order = np.nonzero(sel)[0]
    by_bin: dict[int, list[float]] = {}
    for i in order:
        by_bin.setdefault(int(ks[i]), []).append(float(weights[i]))
    for k, vals in by_bin.items():
        bins[k] = math.fsum(math.exp(v) for v in vals)
        counts[k] = len(vals)
    return AnnulusTable(c=c, bins=bins, counts=counts,
                        horizon=db.horizon if horizon is None else horizon,
                        truncation=dict(db.truncation))


def fit_exponent(tab: AnnulusTable, window_bins: int | None = None,
                 min_bins: int = 5) -> ExponentEstimate:
    """Trailing-window least-squares slope of log Q_t vs t.  The cumulative
    estimator log(sum_{s<=t} Q_s)/t is reported as a systematic diagnostic."""
    usable = tab.complete_bins()
    if len(usable) < min_bins:
        raise InsufficientDataError(
            f"{len(usable)} usable bins (< {min_bins}) within horizon "
            f"{tab.horizon}")
    if window_bins is None:
        window_bins = max(min_bins, (2 * len(usable)) // 3)
    window_bins = min(window_bins, len(usable))
    sel = usable[-window_bins:]
    ts = np.array([t for t, _ in sel])
    logq = np.log(np.array([q for _, q in sel]))
    n = len(ts)
    tbar = ts.mean()
    sxx = float(((ts - tbar) ** 2).sum())
    slope = float(((ts - tbar) * (logq - logq.mean())).sum() / sxx)
    resid = logq - (logq.mean() + slope * (ts - tbar))
    stderr = (math.sqrt(float((resid ** 2).sum()) / (n - 2) / sxx)
              if n > 2 else 0.0)
    cumulative = math.log(math.fsum(q for _, q in usable)) / usable[-1][0]
    return ExponentEstimate(
        value=slope, stderr=stderr,
        window=(float(ts[0]), float(ts[-1])),
        method="trailing-slope",
        truncation=tab.truncation,
        diagnostics={"cumulative": cumulative,
                     "discrepancy": abs(slope - cumulative),
                     "bins_used": n},
    )


def critical_exponent(db: OrbitDatabase, field_or_none=None, c: float = 1.0,
                      step: float = 0.05, weights=None,
                      window_bins: int | None = None) -> ExponentEstimate:
    """delta_Gamma(F): exponent of the annulus sums of the whole database."""
    if weights is None:
        weights = (orbital_integrals(field_or_none, db, step)
                   if field_or_none is not None else None)
    return fit_exponent(annulus_sums(db, weights, c), window_bins)


# ---------------------------------------------------------------------------
# Fundamental group outside B(o, R)


class GammaKAnalyzer:
    """Per-element obstruction data for membership in Gamma_{B(o,R)}.

    For element gamma, an obstruction is a translate g o (g not id, gamma)
    close to the segment [o, gamma o].  We record, per element:
      - strict_min: min over g of dist(g o, [o, gamma o]);
      - for translates with dist <= R_cap: (dist, foot, edge) with foot the
        arclength of the closest segment point and edge its distance to the
        nearer endpoint.
    Membership at any R <= R_cap is then a table lookup:
      strict:  member iff strict_min > R;
      relaxed: member iff no g has dist <= R < edge (violations whose closest
               point sits within R of an endpoint model x, y ranging over the
               compact ball and are ignored).
    """

    def __init__(self, db: OrbitDatabase, r_cap: float = 6.0):
        self.db = db
        self.r_cap = r_cap
        n = len(db)
        pts = db.points
        d = db.distances
        self.strict_min = np.full(n, np.inf)
        self._dists: list[np.ndarray] = [np.empty(0)] * n
        self._foots: list[np.ndarray] = [np.empty(0)] * n
        self._edges: list[np.ndarray] = [np.empty(0)] * n
        id_idx = int(np.argmin(d))

        for i in range(n):
            if d[i] == 0.0:
                continue
            seg = GeodesicSegment(BASEPOINT, Point(pts[i, 0], pts[i, 1]))
            length = d[i]
            # cheap detour prefilter: a translate within r of the segment has
            # d(o,go) + d(go, gamma o) - d(o, gamma o) <= 2r (thin triangle)
            dg_end = _dist_to_point(pts, pts[i])
            detour = d + dg_end - length
            cand = np.nonzero(detour <= 2.0 * self.r_cap + 1e-9)[0]
            cand = cand[(cand != i) & (cand != id_idx)]
            if len(cand) == 0:
                continue
            dd, foot = segment_foot_array(seg, pts[cand, 0], pts[cand, 1])
            self.strict_min[i] = dd.min() if len(dd) else np.inf
            keep = dd <= self.r_cap
            self._dists[i] = dd[keep]
            self._foots[i] = foot[keep]
            self._edges[i] = np.minimum(foot[keep], length - foot[keep])

    def members(self, R: float, mode: str = "relaxed") -> np.ndarray:
        """Boolean mask over database elements (identity excluded)."""
        if R > self.r_cap:
            raise ValueError(f"R={R} exceeds analyzer cap {self.r_cap}")
        n = len(self.db)
        d = self.db.distances
        out = np.zeros(n, dtype=bool)
        for i in range(n):
            if d[i] == 0.0:
                continue
            if mode == "strict":
                out[i] = self.strict_min[i] > R
            elif mode == "relaxed":
                viol = (self._dists[i] <= R) & (self._edges[i] > R)
                out[i] = not viol.any()
            else:
                raise ValueError(f"unknown mode {mode!r}")
        return out

    def window_blocked(self, i: int, R: float, t0: float, t1: float) -> bool:
        """Does [o, gamma_i o] pass within R of a translate at arclength in
        [t0, t1]?  (Excursion-set membership helper.)"""
        dd, foot = self._dists[i], self._foots[i]
        hit = (dd <= R) & (foot >= t0) & (foot <= t1)
        return bool(hit.any())


def _dist_to_point(pts: np.ndarray, p: np.ndarray) -> np.ndarray:
    u = ((pts[:, 0] - p[0]) ** 2 + (pts[:, 1] - p[1]) ** 2) / (2.0 * pts[:, 1] * p[1])
    return np.arccosh(1.0 + np.maximum(u, 0.0))


def gamma_k_test(idx: int, R: float, analyzer: GammaKAnalyzer,
                 mode: str = "relaxed") -> bool:
    """Membership of database element `idx` in Gamma_{B(o,R)}."""
    db = analyzer.db
    if db.horizon < db.distances[idx] + 2.0 * R:
        raise HorizonError(
            f"need horizon >= {db.distances[idx] + 2 * R:.3f}, have {db.horizon:.3f}")
    return bool(analyzer.members(R, mode)[idx])


def restricted_exponent(db: OrbitDatabase, weights: np.ndarray | None,
                        R: float, analyzer: GammaKAnalyzer,
                        mode: str = "relaxed", c: float = 1.0,
                        window_bins: int | None = None,
                        empty_tail_bins: int = 3) -> ExponentEstimate:
    """delta_{Gamma_{B(o,R)}}(F).  Membership certified only up to
    horizon - 2R; eventually-empty annuli yield the -inf sentinel with the
    first empty tail bin as witness."""
    mask = analyzer.members(R, mode)
    horizon = db.horizon - 2.0 * R
    tab = annulus_sums(db, weights, c, member_mask=mask, horizon=horizon)
    empty_from = tab.tail_empty_from()
    if empty_from is not None and horizon - empty_from >= empty_tail_bins * c - 1e-9:
        return ExponentEstimate(
            value=MINUS_INF, stderr=0.0, window=(empty_from, horizon),
            method="empty-tail-sentinel", truncation=tab.truncation,
            diagnostics={"witness_T": empty_from,
                         "member_count": int(mask.sum()), "R": R, "mode": mode})
    try:
        est = fit_exponent(tab, window_bins)
    except InsufficientDataError as exc:
        raise InsufficientDataError(
            f"Gamma_K too sparse at R={R} ({int(mask.sum())} members): {exc}"
        ) from exc
    est.diagnostics.update({"member_count": int(mask.sum()), "R": R, "mode": mode})
    return est


@dataclass
class InfinityReport:
    per_R: list[ExponentEstimate]
    summary: float
    summary_stderr: float
    full: ExponentEstimate
    spr_gap: float
    spr_gap_stderr: float


def exponent_at_infinity(db: OrbitDatabase, weights: np.ndarray | None,
                         R_grid, analyzer: GammaKAnalyzer,
                         mode: str = "relaxed", c: float = 1.0) -> InfinityReport:
    """Restricted exponents along an increasing R grid; the limiting summary
    is the last stable value (or the -inf sentinel) and the SPR verdict is
    the gap to the full exponent."""
    if list(R_grid) != sorted(R_grid):
        raise ValueError("R_grid must be increasing")
    full = critical_exponent(db, weights=weights, c=c)
    per_R = []
    for R in R_grid:
        per_R.append(restricted_exponent(db, weights, R, analyzer, mode, c))
    last = per_R[-1]
    if last.is_sentinel:
        summary, summary_err = MINUS_INF, 0.0
        gap, gap_err = math.inf, 0.0
    else:
        summary, summary_err = last.value, last.stderr
        gap = full.value - summary
        gap_err = combined_stderr(full, last)
    return InfinityReport(per_R=per_R, summary=summary, summary_stderr=summary_err,
                          full=full, spr_gap=gap, spr_gap_stderr=gap_err)


# ---------------------------------------------------------------------------
# Compact perturbations


@dataclass
class SweepRow:
    lam: float
    full: ExponentEstimate
    restricted: ExponentEstimate


@dataclass
class SweepReport:
    rows: list[SweepRow]
    restricted_invariant: bool
    full_nondecreasing: bool
    discrete_convex: bool
    well_inequality: bool | None
    flags: dict


def perturbation_sweep(db: OrbitDatabase, base_field: PotentialField,
                       bump_field: PotentialField, lam_grid, R: float,
                       analyzer: GammaKAnalyzer, mode: str = "relaxed",
                       c: float = 1.0, step: float = 0.05,
                       support_margin: float = 0.5,
                       convexity_tol: float = 0.02,
                       well_tol: float = 0.03) -> SweepReport:
    """delta_Gamma(F + lam A) and delta_{Gamma_K}(F + lam A) along lam_grid.

    The potential integral is linear in lam, so both per-element integrals
    are computed once.  The bump support must sit inside B(o, R) with the
    given margin."""
    from .hypgeom import dist as _hdist
    from .potential import RadialBump, RadialSlope

    for t in bump_field.spec.terms:
        if isinstance(t, RadialBump):
            reach = _hdist(BASEPOINT, t.center) + t.radius
            if reach > R - support_margin:
                raise ValueError(
                    f"bump support (reach {reach:.3f}) violates R={R} with "
                    f"margin {support_margin}")
        elif isinstance(t, RadialSlope):
            raise ValueError("perturbation_sweep expects compactly supported bumps")

    w_f = orbital_integrals(base_field, db, step)
    w_a = orbital_integrals(bump_field, db, step)
    mask = analyzer.members(R, mode)
    rows = []
    for lam in lam_grid:
        w = w_f + lam * w_a
        full = fit_exponent(annulus_sums(db, w, c))
        tab = annulus_sums(db, w, c, member_mask=mask, horizon=db.horizon - 2 * R)
        restricted = fit_exponent(tab)
        restricted.diagnostics.update({"R": R, "mode": mode})
        rows.append(SweepRow(lam=lam, full=full, restricted=restricted))

    zero_rows = [r for r in rows if r.lam == 0.0]
    base_restricted = (zero_rows[0] if zero_rows else rows[0]).restricted
    inv = all(abs(r.restricted.value - base_restricted.value)
              <= 2.0 * combined_stderr(r.restricted, base_restricted) + 1e-12
              for r in rows)
    vals = [r.full.value for r in rows]
    nondec = all(vals[i + 1] >= vals[i] - 1e-9 for i in range(len(vals) - 1))
    convex = True
    lams = [r.lam for r in rows]
    for i in range(1, len(rows) - 1):
        h1, h2 = lams[i] - lams[i - 1], lams[i + 1] - lams[i]
        second = ((vals[i + 1] - vals[i]) / h2 - (vals[i] - vals[i - 1]) / h1)
        if second < -convexity_tol:
            convex = False
    well = None
    neg = [r for r in rows if r.lam < 0]
    if neg:
        well = all(base_restricted.value <= r.full.value + well_tol for r in neg)
    return SweepReport(rows=rows, restricted_invariant=inv,
                       full_nondecreasing=nondec, discrete_convex=convex,
                       well_inequality=well,
                       flags={"convexity_tol": convexity_tol, "well_tol": well_tol})
