"""Discretized conformal boundary measures: atomic measures on the disk
boundary with exponent-weighted orbit atoms, shadow mass-ratio checks, the
potential-weighted boundary cocycle, and the mass decay of excursion sets
(exponential recurrence)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .group import OrbitDatabase
from .hypgeom import (BASEPOINT, BoundaryPoint, GeodesicSegment, Isometry,
                      Point, boundary_angle_of_point, busemann, dist,
                      shadow_halfangle)
from .potential import PotentialField, line_integral, orbital_integrals
from .pressure import MINUS_INF, GammaKAnalyzer

TWO_PI = 2.0 * math.pi


class MeasureUnderflowError(RuntimeError):
    pass


@dataclass
class AtomicBoundaryMeasure:
    """Normalized atomic measure on the boundary circle.  Atom weights are
    h(d_o) e^{-s d_o + f_int} / normalizer with h == 1; atoms sorted by angle.
    `source` indexes back into the orbit database."""
    angles: np.ndarray
    weights: np.ndarray
    d_o: np.ndarray
    f_int: np.ndarray
    source: np.ndarray
    s: float
    normalization: float

    def __len__(self):
        return len(self.angles)

    def _arc_mask(self, center: float, halfwidth: float) -> np.ndarray:
        lo = (center - halfwidth) % TWO_PI
        hi = (center + halfwidth) % TWO_PI
        a = self.angles % TWO_PI
        if halfwidth >= math.pi:
            return np.ones(len(a), dtype=bool)
        if lo <= hi:
            return (a >= lo) & (a <= hi)
        return (a >= lo) | (a <= hi)

    def arc_mass(self, center: float, halfwidth: float,
                 min_depth: float = -math.inf) -> float:
        """Mass of the arc [center - halfwidth, center + halfwidth] mod 2pi,
        optionally restricted to atoms with d_o >= min_depth."""
        if min_depth > -math.inf:
            mask = self._arc_mask(center, halfwidth) & (self.d_o >= min_depth)
            return float(self.weights[mask].sum())
        if halfwidth >= math.pi:
            return float(self.weights.sum())
        lo = (center - halfwidth) % TWO_PI
        hi = (center + halfwidth) % TWO_PI
        a = self.angles % TWO_PI
        order = np.argsort(a, kind="stable")
        a_sorted = a[order]
        w_sorted = self.weights[order]
        cw = np.concatenate([[0.0], np.cumsum(w_sorted)])
        if lo <= hi:
            i0 = np.searchsorted(a_sorted, lo, side="left")
            i1 = np.searchsorted(a_sorted, hi, side="right")
            return float(cw[i1] - cw[i0])
        i1 = np.searchsorted(a_sorted, hi, side="right")
        i0 = np.searchsorted(a_sorted, lo, side="left")
        return float(cw[i1] + (cw[-1] - cw[i0]))

    def arc_count(self, center: float, halfwidth: float,
                  min_depth: float = -math.inf) -> int:
        mask = self._arc_mask(center, halfwidth)
        if min_depth > -math.inf:
            mask = mask & (self.d_o >= min_depth)
        return int(np.count_nonzero(mask))


def build_ps_measure(db: OrbitDatabase, field_: PotentialField | None,
                     s: float, f_int: np.ndarray | None = None,
                     step: float = 0.05) -> AtomicBoundaryMeasure:
    """Atomic measure with one atom per orbit point, in the direction of the
    point seen from the disk center."""
    d = db.distances
    if f_int is None:
        f_int = (orbital_integrals(field_, db, step) if field_ is not None
                 else np.zeros(len(d)))
    logw = -s * d + f_int
    # stabilize before exponentiating; the shift cancels on normalization
    shift = logw.max()
    w = np.exp(logw - shift)
    total = float(w.sum())
    if not math.isfinite(total) or total <= 0.0:
        raise MeasureUnderflowError(
            f"all atom weights underflowed at s={s}; use a smaller exponent")
    pts = db.points
    angles = np.array([boundary_angle_of_point(Point(x, y)) for x, y in pts])
    order = np.argsort(angles, kind="stable")
    return AtomicBoundaryMeasure(
        angles=angles[order], weights=(w / total)[order], d_o=d[order],
        f_int=f_int[order], source=order, s=s,
        normalization=total * math.exp(shift))


# ---------------------------------------------------------------------------
# Shadow mass ratios


@dataclass
class ShadowRow:
    source: int
    d_o: float
    angle: float
    halfangle: float
    arc_mass: float
    arc_count: int
    ratio: float


@dataclass
class ShadowReport:
    rows: list[ShadowRow]
    max_ratio: float
    min_ratio: float
    slope: float
    slope_stderr: float
    zero_arcs: int


def shadow_mass_check(m: AtomicBoundaryMeasure, R: float,
                      d_min: float = 5.0, d_max: float = 10.0,
                      max_rows: int = 4000) -> ShadowReport:
    """Per test element: mass of the boundary arc shadowed by the ball of
    radius R around its orbit point, against the raw weight
    e^{-s d_o + f_int}.  The regression slope of log ratio vs d_o is the
    drift diagnostic (flat when s sits at the growth exponent).

    Arc membership carries a depth gate d_o >= d_o(gamma) - 2R: a shadow
    direction stands for a geodesic passing through the ball, and an atom
    whose orbit point stops short of the ball cannot do that.  Without the
    gate a single shallow heavy atom that happens to fall in a narrow deep
    arc dominates the ratio."""
    sel = np.nonzero((m.d_o >= d_min) & (m.d_o <= d_max))[0]
    if len(sel) == 0:
        raise ValueError(f"no atoms with d_o in [{d_min}, {d_max}]")
    if R >= m.d_o[sel].min():
        raise ValueError("R must be below the smallest tested distance")
    if len(sel) > max_rows:
        sel = sel[np.linspace(0, len(sel) - 1, max_rows).astype(int)]
    rows = []
    zero = 0
    for i in sel:
        half = shadow_halfangle(float(m.d_o[i]), R)
        gate = float(m.d_o[i]) - 2.0 * R
        mass = m.arc_mass(float(m.angles[i]), half, min_depth=gate)
        count = m.arc_count(float(m.angles[i]), half, min_depth=gate)
        denom = math.exp(-m.s * float(m.d_o[i]) + float(m.f_int[i])) / m.normalization
        ratio = mass / denom
        if mass == 0.0:
            zero += 1
        rows.append(ShadowRow(source=int(m.source[i]), d_o=float(m.d_o[i]),
                              angle=float(m.angles[i]), halfangle=half,
                              arc_mass=mass, arc_count=count, ratio=ratio))
    good = [r for r in rows if r.ratio > 0.0]
    logr = np.array([math.log(r.ratio) for r in good])
    ds = np.array([r.d_o for r in good])
    dbar = ds.mean()
    sxx = float(((ds - dbar) ** 2).sum())
    slope = float(((ds - dbar) * (logr - logr.mean())).sum() / sxx)
    resid = logr - (logr.mean() + slope * (ds - dbar))
    n = len(ds)
    stderr = (math.sqrt(float((resid ** 2).sum()) / (n - 2) / sxx)
              if n > 2 else 0.0)
    return ShadowReport(rows=rows,
                        max_ratio=max(r.ratio for r in good),
                        min_ratio=min(r.ratio for r in good),
                        slope=slope, slope_stderr=stderr, zero_arcs=zero)


# ---------------------------------------------------------------------------
# Weighted boundary cocycle


def gibbs_cocycle(xi: BoundaryPoint, x: Point, y: Point,
                  field_: PotentialField | None, Z: float = 30.0,
                  step: float = 0.01) -> float:
    """Difference of potential integrals along [x, z] and [y, z] with z on
    the ray from x toward xi at distance Z.  Exact (up to quadrature) once
    both rays have exited all bump supports; for a constant potential this is
    the constant times the Busemann cocycle."""
    if Z < 20.0:
        raise ValueError("truncation horizon Z must be at least 20")
    if field_ is None:
        return 0.0
    if field_.spec.is_constant:
        return field_.spec.constant_part * busemann(xi, x, y)
    ray = GeodesicSegment(x, xi)
    z = ray.eval(Z)
    return (line_integral(field_, x, z, step)
            - line_integral(field_, y, z, step))


# ---------------------------------------------------------------------------
# Equivariance spot check


@dataclass
class EquivarianceReport:
    arcs: int
    max_rel_error: float
    mean_rel_error: float


def equivariance_check(m: AtomicBoundaryMeasure, db: OrbitDatabase,
                       field_: PotentialField | None, g: Isometry,
                       delta: float, n_arcs: int = 16,
                       min_atoms: int = 50, Z: float = 30.0) -> EquivarianceReport:
    """Push each atom gamma o to g gamma o and reweight by e^{-delta b + rho},
    with b the Busemann cocycle beta_xi(o, g o) at the pushed direction xi and
    rho the weighted cocycle there; per boundary arc, the reweighted pushed
    mass should reproduce the measure's own mass at the pushed atoms.  (The
    atom at g gamma o carries a weight differing from the source atom's by
    e^{-delta (d(o, g gamma o) - d(g o, g gamma o)) + ...}, and the
    parenthesis converges to b.)  Comparison is restricted to atom pairs
    where both gamma and g gamma are stored, so both sides range over the
    same elements and the truncation-shell mismatch cancels; shallow atoms
    are dropped because the cocycle is an asymptotic statement."""
    o = BASEPOINT
    go = g.apply(o)

    def _key(mat: Isometry):
        return tuple(round(v, 6) for v in mat.entries())

    index = {_key(e.matrix): i for i, e in enumerate(db.elements)}
    w_by_db = np.empty(len(m))
    w_by_db[m.source] = m.weights
    ang_by_db = np.empty(len(m))
    ang_by_db[m.source] = m.angles
    d_by_db = db.distances

    pushed_angles, predicted, actual = [], [], []
    for i, e in enumerate(db.elements):
        if d_by_db[i] < 3.0:
            continue
        j = index.get(_key(g @ e.matrix))
        if j is None or d_by_db[j] < 3.0:
            continue
        xi = BoundaryPoint.from_angle(float(ang_by_db[j]))
        b = busemann(xi, o, go)
        rho = gibbs_cocycle(xi, o, go, field_, Z) if field_ is not None else 0.0
        pushed_angles.append(float(ang_by_db[j]))
        predicted.append(math.exp(math.log(w_by_db[i]) - delta * b + rho))
        actual.append(float(w_by_db[j]))
    if not actual:
        raise ValueError("no pushed atoms stayed inside the database")
    pushed_angles = np.array(pushed_angles)
    predicted = np.array(predicted)
    actual = np.array(actual)

    edges = np.linspace(-math.pi, math.pi, n_arcs + 1)
    errs = []
    used = 0
    for a0, a1 in zip(edges[:-1], edges[1:]):
        sel = (pushed_angles >= a0) & (pushed_angles < a1)
        if int(sel.sum()) < min_atoms:
            continue
        mass_act = float(actual[sel].sum())
        if mass_act <= 0:
            continue
        errs.append(abs(float(predicted[sel].sum()) - mass_act) / mass_act)
        used += 1
    if not errs:
        raise ValueError("no arcs with enough atoms for the equivariance check")
    return EquivarianceReport(arcs=used, max_rel_error=max(errs),
                              mean_rel_error=float(np.mean(errs)))


# ---------------------------------------------------------------------------
# Excursion-set mass decay (exponential recurrence)


@dataclass
class USetReport:
    T0: float
    T_grid: list[float]
    masses: list[float]
    counts: list[int]
    alpha_hat: float          # fitted decay rate (positive = decay)
    alpha_stderr: float
    finite_witness: float | None   # T beyond which the mass is exactly 0
    diagnostics: dict = field(default_factory=dict)


def u_set_mass_decay(m: AtomicBoundaryMeasure, analyzer: GammaKAnalyzer,
                     R: float, T0: float, T_grid) -> USetReport:
    """Mass of atoms whose segment from the base point stays farther than R
    from every orbit translate for arclength in [T0, T], per T.  Exponential
    recurrence predicts decay at rate about the gap between the full and the
    restricted growth exponents.

    Only atoms deep enough to cover the window (d_o >= T) proxy boundary
    directions, so each T sees a different subpopulation whose total mass
    shrinks with T for reasons unrelated to recurrence (the finite horizon).
    The fitted quantity is therefore the conditional mass: avoiding mass
    divided by the total mass of atoms with d_o >= T."""
    if R > analyzer.r_cap:
        raise ValueError(f"R={R} exceeds analyzer cap {analyzer.r_cap}")
    T_grid = sorted(T_grid)
    db = analyzer.db
    if max(T_grid) > db.horizon:
        raise ValueError("T grid exceeds the database horizon")
    masses, counts = [], []
    for T in T_grid:
        tot = 0.0
        tot_all = 0.0
        cnt = 0
        for j in range(len(m)):
            i = int(m.source[j])
            if m.d_o[j] < T:
                continue
            tot_all += float(m.weights[j])
            if analyzer.window_blocked(i, R, T0, T):
                continue
            tot += float(m.weights[j])
            cnt += 1
        masses.append(tot / tot_all if tot_all > 0.0 else 0.0)
        counts.append(cnt)
    finite_witness = None
    for T, mass in zip(T_grid, masses):
        if mass == 0.0:
            finite_witness = T
            break
    pos = [(T, mass) for T, mass in zip(T_grid, masses) if mass > 0.0]
    if len(pos) >= 3:
        ts = np.array([t for t, _ in pos])
        lm = np.log(np.array([v for _, v in pos]))
        tbar = ts.mean()
        sxx = float(((ts - tbar) ** 2).sum())
        slope = float(((ts - tbar) * (lm - lm.mean())).sum() / sxx)
        resid = lm - (lm.mean() + slope * (ts - tbar))
        n = len(ts)
        stderr = (math.sqrt(float((resid ** 2).sum()) / (n - 2) / sxx)
                  if n > 2 else 0.0)
        alpha_hat, alpha_stderr = -slope, stderr
    else:
        alpha_hat = math.inf if finite_witness is not None else MINUS_INF
        alpha_stderr = 0.0
    return USetReport(T0=T0, T_grid=list(T_grid), masses=masses, counts=counts,
                      alpha_hat=alpha_hat, alpha_stderr=alpha_stderr,
                      finite_witness=finite_witness,
                      diagnostics={"R": R, "s": m.s})
