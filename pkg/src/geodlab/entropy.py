"""Dynamical-ball estimators on the quotient: orbit distance under the
geodesic flow, greedy spanning covers, and the growth-rate entropy/pressure
estimate of a sampled flow-invariant measure."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .group import OrbitDatabase
from .hypgeom import BoundaryPoint, GeodesicSegment, Point
from .potential import PotentialField, _integrate_along
from .pressure import ExponentEstimate


@dataclass
class Sample:
    """Unit tangent datum: base point plus forward boundary direction."""
    base: Point
    direction: BoundaryPoint
    weight: float

    def ray(self) -> GeodesicSegment:
        return GeodesicSegment(self.base, self.direction)


@dataclass
class SampledMeasure:
    samples: list[Sample]
    provenance: str
    db: OrbitDatabase | None = None   # translate cache for quotient distances
    translate_bound: float = 10.0

    def __post_init__(self):
        tot = sum(s.weight for s in self.samples)
        if abs(tot - 1.0) > 1e-9:
            for s in self.samples:
                s.weight /= tot

    def translate_matrices(self) -> np.ndarray:
        if self.db is None:
            return np.array([[1.0, 0.0, 0.0, 1.0]])
        sel = self.db.distances <= self.translate_bound
        return self.db.matrices[sel]


def closed_orbit_measure(axis: GeodesicSegment, s_base: float, length: float,
                         db: OrbitDatabase | None, n_samples: int = 64,
                         translate_bound: float = 10.0) -> SampledMeasure:
    """Uniform measure on one closed orbit, sampled along a period of its
    axis; the forward direction is the axis endpoint at +infinity."""
    fwd = axis.endpoints_at_infinity[1]
    samples = []
    for k in range(n_samples):
        p = axis.eval_abs(s_base + length * k / n_samples)
        samples.append(Sample(base=p, direction=fwd, weight=1.0 / n_samples))
    return SampledMeasure(samples=samples, provenance="closed-orbit-uniform",
                          db=db, translate_bound=translate_bound)


def _flow_points(sample: Sample, ts: np.ndarray) -> np.ndarray:
    """(len(ts), 2) base points of the flowed sample."""
    ray = sample.ray()
    ss = ray._s0 + ts
    wy = np.exp(ss)
    al, be, ga, de = ray._ninv.entries()
    den = de * de + ga * ga * wy * wy
    return np.stack([(be * de + al * ga * wy * wy) / den, wy / den], axis=1)


def _min_translate_dist(p: np.ndarray, q: np.ndarray,
                        mats: np.ndarray) -> np.ndarray:
    """Per-time min over translates g of dist(g p_t, q_t); p, q are (n, 2)."""
    a, b, c, d = mats[:, 0], mats[:, 1], mats[:, 2], mats[:, 3]
    x, y = p[:, 0][:, None], p[:, 1][:, None]
    den = (c * x + d) ** 2 + (c * y) ** 2
    gx = ((a * x + b) * (c * x + d) + a * c * y * y) / den
    gy = y / den
    dx = gx - q[:, 0][:, None]
    dy = gy - q[:, 1][:, None]
    u = (dx * dx + dy * dy) / (2.0 * gy * q[:, 1][:, None])
    return np.arccosh(1.0 + np.maximum(u, 0.0)).min(axis=1)


def quotient_orbit_distance(v: Sample, w: Sample, T: float, step: float,
                            mats: np.ndarray) -> float:
    """Dynamical distance: max over sampled t in [0, T] of the quotient base
    distance between the flowed samples.  Overestimates the sup by at most
    step times the flow speed."""
    n = max(2, int(math.ceil(T / step)) + 1)
    ts = np.linspace(0.0, T, n)
    pv = _flow_points(v, ts)
    pw = _flow_points(w, ts)
    return float(_min_translate_dist(pv, pw, mats).max())


@dataclass
class SpanningResult:
    count: int
    covered_mass: float
    weighted_sum: float
    centers: list[int]


class CoverageError(RuntimeError):
    pass


def _distance_matrix(mu: SampledMeasure, T: float, step: float) -> np.ndarray:
    mats = mu.translate_matrices()
    n = len(mu.samples)
    nt = max(2, int(math.ceil(T / step)) + 1)
    ts = np.linspace(0.0, T, nt)
    flows = [_flow_points(s, ts) for s in mu.samples]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            d = float(_min_translate_dist(flows[i], flows[j], mats).max())
            D[i, j] = D[j, i] = d
    return D


def spanning_weight(mu: SampledMeasure, delta: float, eps: float, T: float,
                    field_: PotentialField | None = None,
                    step: float = 0.25) -> SpanningResult:
    """Greedy spanning cover of dynamical balls: repeatedly pick the sample
    whose (eps; T)-ball covers maximal uncovered mass until the fraction
    delta is covered.  Upper-bounds the minimal spanning count; the weighted
    sum is sum of e^{int_0^T F along the flow} over chosen centers."""
    if not 0.0 < delta < 1.0:
        raise ValueError("coverage fraction must lie in (0, 1)")
    n = len(mu.samples)
    weights = np.array([s.weight for s in mu.samples])
    D = _distance_matrix(mu, T, step)
    covered = np.zeros(n, dtype=bool)
    centers: list[int] = []
    mass = 0.0
    while mass < delta - 1e-12:
        gains = np.where(covered[None, :], 0.0, weights[None, :])
        gains = np.where(D <= eps, gains, 0.0).sum(axis=1)
        i = int(np.argmax(gains))  # ties resolved at the lowest index
        if gains[i] <= 0.0:
            raise CoverageError(
                f"coverage stalls at {mass:.4f} < delta={delta}")
        centers.append(i)
        covered |= D[i] <= eps
        mass = float(weights[covered].sum())
    wsum = 0.0
    for i in centers:
        if field_ is None:
            wsum += 1.0
        else:
            ray = mu.samples[i].ray()
            wsum += math.exp(_integrate_along(field_, ray, ray._s0,
                                              ray._s0 + T, 0.05))
    return SpanningResult(count=len(centers), covered_mass=mass,
                          weighted_sum=wsum, centers=centers)


def katok_estimate(mu: SampledMeasure, delta: float, eps: float, T_grid,
                   field_: PotentialField | None = None,
                   step: float = 0.25) -> ExponentEstimate:
    """Growth-rate estimate of the (weighted) spanning cover over the time
    grid: entropy when no potential is given, pressure otherwise.  The [0, T]
    normalization is recorded in the diagnostics."""
    T_grid = sorted(T_grid)
    if len(T_grid) < 4:
        raise ValueError("need at least 4 grid times")
    logs = []
    counts = []
    for T in T_grid:
        res = spanning_weight(mu, delta, eps, T, field_, step)
        logs.append(math.log(res.weighted_sum))
        counts.append(res.count)
    ts = np.array(T_grid, dtype=float)
    ys = np.array(logs)
    tbar = ts.mean()
    sxx = float(((ts - tbar) ** 2).sum())
    slope = float(((ts - tbar) * (ys - ys.mean())).sum() / sxx)
    resid = ys - (ys.mean() + slope * (ts - tbar))
    n = len(ts)
    stderr = math.sqrt(float((resid ** 2).sum()) / (n - 2) / sxx) if n > 2 else 0.0
    return ExponentEstimate(
        value=slope, stderr=stderr, window=(float(ts[0]), float(ts[-1])),
        method="katok-spanning",
        truncation={"normalization": "[0,T]", "eps": eps, "delta": delta},
        diagnostics={"counts": counts, "provenance": mu.provenance})
