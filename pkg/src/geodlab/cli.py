"""Scenario runner: bind a preset group, a potential, and a list of analyses;
emit a deterministic JSON report (and optional CSV bundle) whose exit code
reflects the declared tolerance checks."""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .entropy import closed_orbit_measure, katok_estimate
from .group import enumerate_modular_ball, enumerate_orbit, verify_schottky
from .hypgeom import Point
from .orbits import (build_periodic_orbits, fill_period_integrals,
                     gurevic_infinity_grid, gurevic_pressure,
                     weighted_excursion_sum)
from .potential import (Constant, PotentialField, PotentialSpec, RadialBump,
                        RadialSlope, orbital_integrals)
from .presets import PRESETS
from .pressure import (GammaKAnalyzer, MINUS_INF, combined_stderr,
                       critical_exponent, exponent_at_infinity,
                       perturbation_sweep, restricted_exponent)
from .psmeasure import build_ps_measure, shadow_mass_check, u_set_mass_decay

ANALYSES = ("exponent", "infinity", "gurevic", "gurevic_infinity", "sweep",
            "ps_check", "recurrence", "entropy", "excursion_check")

# Per-preset default knobs.  The modular preset skips every analysis that
# needs the all-pairs segment analyzer or an orbit census: its ball holds
# hundreds of thousands of elements and those passes scale quadratically.
_PRESET_DEFAULTS = {
    "schottky_pair": {
        "analyses": ANALYSES,
        "sweep_R": 1.2,
        "ginf_R_grid": [2.5, 3.0],
        "exc_R": 2.0, "exc_R_outer": 3.0,
        "rec_T0": 1.0,
    },
    "schottky_parabolic": {
        "analyses": ANALYSES,
        "sweep_R": 2.0,
        "ginf_R_grid": [0.3, 0.4],
        "exc_R": 0.4, "exc_R_outer": 0.4,
        "rec_T0": 4.0,
    },
    "modular_group": {
        "analyses": ("exponent", "ps_check"),
        "sweep_R": 1.2,
        "ginf_R_grid": [1.0, 1.5],
        "exc_R": 1.0, "exc_R_outer": 1.5,
        "rec_T0": 1.0,
    },
}

_CONFIG_FIELDS = {"preset", "preset_args", "potential", "analyses",
                  "truncation", "params", "seed"}
_TRUNCATION_FIELDS = {"max_dist", "max_words", "orbit_max_len", "max_elements"}
_PARAM_FIELDS = {"R", "R_grid", "alpha", "alpha_grid", "mode", "bin_width",
                 "lam_grid", "s_offset", "T0", "T_grid", "eps", "delta_cover",
                 "R_outer", "slack"}


class ConfigError(ValueError):
    pass


def load_config(obj) -> dict:
    """Validate a scenario config (dict or JSON path); unknown fields are
    rejected."""
    if isinstance(obj, str):
        with open(obj) as fh:
            obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(obj) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    cfg = {
        "preset": obj.get("preset", "schottky_pair"),
        "preset_args": dict(obj.get("preset_args", {})),
        "potential": obj.get("potential", {"terms": []}),
        "analyses": obj.get("analyses"),
        "truncation": dict(obj.get("truncation", {})),
        "params": dict(obj.get("params", {})),
        "seed": int(obj.get("seed", 0)),
    }
    if cfg["preset"] not in PRESETS:
        raise ConfigError(f"unknown preset {cfg['preset']!r} "
                          f"(available: {sorted(PRESETS)})")
    if cfg["analyses"] is None:
        cfg["analyses"] = list(_PRESET_DEFAULTS[cfg["preset"]]["analyses"])
    else:
        cfg["analyses"] = list(cfg["analyses"])
    for a in cfg["analyses"]:
        if a not in ANALYSES:
            raise ConfigError(f"unknown analysis {a!r} (available: {ANALYSES})")
    bad = set(cfg["truncation"]) - _TRUNCATION_FIELDS
    if bad:
        raise ConfigError(f"unknown truncation fields: {sorted(bad)}")
    bad = set(cfg["params"]) - _PARAM_FIELDS
    if bad:
        raise ConfigError(f"unknown params: {sorted(bad)}")
    _parse_potential(cfg["potential"])  # validates
    return cfg


def _parse_potential(obj) -> PotentialSpec:
    if not isinstance(obj, dict) or set(obj) - {"terms"}:
        raise ConfigError("potential must be {'terms': [...]}")
    terms = []
    for t in obj.get("terms", []):
        kind = t.get("type")
        if kind == "constant":
            terms.append(Constant(float(t["value"])))
        elif kind == "bump":
            cx, cy = t.get("center", [0.0, 1.0])
            terms.append(RadialBump(Point(float(cx), float(cy)),
                                    float(t["height"]), float(t["radius"])))
        elif kind == "slope":
            ax, ay = t.get("anchor", [0.0, 1.0])
            terms.append(RadialSlope(Point(float(ax), float(ay)),
                                     float(t["slope"]), float(t["cap"])))
        else:
            raise ConfigError(f"unknown potential term type {kind!r}")
    return PotentialSpec(tuple(terms))


def _est_block(est) -> dict:
    return {
        "value": None if est.value == MINUS_INF else est.value,
        "sentinel": est.is_sentinel,
        "stderr": est.stderr,
        "window": list(est.window),
        "method": est.method,
        "truncation": {k: v for k, v in sorted(est.truncation.items())},
        "diagnostics": {k: v for k, v in sorted(est.diagnostics.items())
                        if isinstance(v, (int, float, str, bool))},
    }


class _Lab:
    """Shared caches: one orbit database, analyzer, and orbit census per run."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.presentation = PRESETS[cfg["preset"]](**cfg["preset_args"])
        tr = cfg["truncation"]
        defaults = {"schottky_pair": (20.0, 40, 18.0),
                    "schottky_parabolic": (19.0, 80, 18.0),
                    "modular_group": (12.0, 0, 10.0)}
        d_def, w_def, l_def = defaults[cfg["preset"]]
        self.max_dist = float(tr.get("max_dist", d_def))
        self.max_words = int(tr.get("max_words", w_def))
        self.orbit_max_len = float(tr.get(
            "orbit_max_len", min(l_def, self.max_dist - 1.0)))
        if cfg["preset"] == "modular_group":
            self.db = enumerate_modular_ball(self.presentation, self.max_dist)
        else:
            self.db = enumerate_orbit(
                self.presentation, self.max_words, self.max_dist,
                max_elements=int(tr.get("max_elements", 2_000_000)))
        spec = _parse_potential(cfg["potential"])
        self.field = PotentialField(spec, self.db)
        self.weights = orbital_integrals(self.field, self.db)
        self._analyzer = None
        self._census = None
        self._full = None

    def analyzer(self, r_cap: float = 4.0) -> GammaKAnalyzer:
        if self._analyzer is None or self._analyzer.r_cap < r_cap:
            self._analyzer = GammaKAnalyzer(self.db, r_cap)
        return self._analyzer

    def census(self):
        if self._census is None:
            self._census = build_periodic_orbits(
                self.presentation, self.db, self.orbit_max_len)
            fill_period_integrals(self._census, self.field, "F")
        return self._census

    def full_exponent(self):
        if self._full is None:
            self._full = critical_exponent(self.db, weights=self.weights)
        return self._full


def run_scenario(cfg: dict) -> dict:
    """Execute the configured analyses, reusing one orbit database.  Errors
    in one analysis are recorded and do not abort the rest."""
    cfg = load_config(cfg)
    lab = _Lab(cfg)
    report = {
        "version": __version__,
        "config": cfg,
        "enumeration": {
            "elements": len(lab.db),
            "horizon": lab.db.horizon,
            "truncation": {k: v for k, v in sorted(lab.db.truncation.items())},
        },
        "analyses": {},
        "checks": [],
        "errors": [],
    }
    if lab.presentation.schottky_disks is not None:
        rep = verify_schottky(lab.presentation)
        report["enumeration"]["schottky_ok"] = rep.ok
    params = cfg["params"]
    for name in cfg["analyses"]:
        try:
            block, checks = _run_analysis(name, lab, params)
        except Exception as exc:  # partial report contract
            report["errors"].append({"analysis": name, "error": str(exc)})
            continue
        report["analyses"][name] = block
        report["checks"].extend(checks)
    report["ok"] = (not report["errors"]
                    and all(c["ok"] for c in report["checks"]))
    return report


def _run_analysis(name: str, lab: _Lab, params: dict):
    defaults = _PRESET_DEFAULTS[lab.cfg["preset"]]
    R = float(params.get("R", 2.0))
    mode = params.get("mode", "relaxed")
    c = float(params.get("bin_width", 1.0))
    checks = []
    if name == "exponent":
        est = lab.full_exponent()
        return _est_block(est), checks

    if name == "infinity":
        grid = [float(r) for r in params.get("R_grid", [1.0, 2.0, 3.0])]
        rep = exponent_at_infinity(lab.db, lab.weights, grid,
                                   lab.analyzer(max(grid)), mode, c)
        block = {
            "per_R": [_est_block(e) for e in rep.per_R],
            "summary": None if rep.summary == MINUS_INF else rep.summary,
            "sentinel": rep.summary == MINUS_INF,
            "full": _est_block(rep.full),
            "spr_gap": None if math.isinf(rep.spr_gap) else rep.spr_gap,
            "spr_gap_stderr": rep.spr_gap_stderr,
        }
        return block, checks

    if name == "gurevic":
        census = lab.census()
        c_g = float(params.get("bin_width", 2.0))
        est = gurevic_pressure(census, lab.db, "F", R, c_g)
        full = lab.full_exponent()
        gap = abs(est.value - full.value)
        checks.append({"name": "gurevic_matches_exponent", "ok": gap <= 0.05,
                       "value": gap, "tolerance": 0.05})
        block = _est_block(est)
        block["exponent_gap"] = gap
        return block, checks

    if name == "gurevic_infinity":
        census = lab.census()
        R_grid = [float(r) for r in params.get("R_grid", defaults["ginf_R_grid"])]
        a_grid = [float(a) for a in params.get("alpha_grid", [0.2, 0.1])]
        c_inf = float(params.get("bin_width", 2.0))
        summ = gurevic_infinity_grid(census, lab.db, "F", R_grid, a_grid, c_inf)
        block = {
            "corner": _est_block(summ.corner),
            "monotone_trend": summ.monotone_trend,
            "grid": [{"R": r, "alpha": a, "estimate": _est_block(e)}
                     for r, a, e in summ.grid],
        }
        return block, checks

    if name == "sweep":
        lam_grid = [float(v) for v in params.get("lam_grid", [0.0, 1.0, 2.0, 5.0])]
        R_sw = float(params.get("R", defaults["sweep_R"]))
        bump = PotentialField(
            PotentialSpec((RadialBump(Point(0.0, 1.0), 1.0,
                                      min(1.0, R_sw - 0.6)),)), lab.db)
        rep = perturbation_sweep(lab.db, lab.field, bump, lam_grid, R_sw,
                                 lab.analyzer(R_sw), mode, c)
        for flag in ("restricted_invariant", "full_nondecreasing",
                     "discrete_convex"):
            checks.append({"name": f"sweep_{flag}", "ok": getattr(rep, flag),
                           "value": getattr(rep, flag), "tolerance": None})
        block = {
            "rows": [{"lam": r.lam, "full": _est_block(r.full),
                      "restricted": _est_block(r.restricted)}
                     for r in rep.rows],
            "restricted_invariant": rep.restricted_invariant,
            "full_nondecreasing": rep.full_nondecreasing,
            "discrete_convex": rep.discrete_convex,
            "well_inequality": rep.well_inequality,
        }
        return block, checks

    if name == "ps_check":
        full = lab.full_exponent()
        s = full.value + float(params.get("s_offset", 0.05))
        m = build_ps_measure(lab.db, None, s, f_int=lab.weights)
        rep = shadow_mass_check(m, R=min(R, 2.0))
        ok = -0.07 <= rep.slope <= 0.07
        checks.append({"name": "shadow_slope_flat", "ok": ok,
                       "value": rep.slope, "tolerance": 0.07})
        block = {"s": s, "slope": rep.slope, "slope_stderr": rep.slope_stderr,
                 "max_ratio": rep.max_ratio, "min_ratio": rep.min_ratio,
                 "rows": len(rep.rows), "zero_arcs": rep.zero_arcs}
        return block, checks

    if name == "recurrence":
        full = lab.full_exponent()
        s = full.value + float(params.get("s_offset", 0.02))
        analyzer = lab.analyzer(R)
        restr = restricted_exponent(lab.db, lab.weights, R, analyzer, mode, c)
        m = build_ps_measure(lab.db, None, s, f_int=lab.weights)
        T0 = float(params.get("T0", defaults["rec_T0"]))
        T_grid = params.get("T_grid")
        if T_grid is None:
            T_grid = list(np.arange(T0 + 2.0, lab.db.horizon - 1.0, 1.0))
        rep = u_set_mass_decay(m, analyzer, R, T0, [float(t) for t in T_grid])
        block = {
            "alpha_hat": None if math.isinf(rep.alpha_hat) else rep.alpha_hat,
            "alpha_stderr": rep.alpha_stderr,
            "finite_witness": rep.finite_witness,
            "masses": rep.masses, "T_grid": rep.T_grid,
            "restricted": _est_block(restr), "s": s,
        }
        if not math.isinf(rep.alpha_hat) and not restr.is_sentinel:
            predicted = s - restr.value
            gap = abs(rep.alpha_hat - predicted)
            checks.append({"name": "recurrence_gap", "ok": gap <= 0.1,
                           "value": gap, "tolerance": 0.1})
            block["predicted"] = predicted
        return block, checks

    if name == "entropy":
        census = lab.census()
        if not census.orbits:
            raise RuntimeError("no periodic orbits available")
        orb = census.orbits[0]
        mu = closed_orbit_measure(orb.axis, orb.s_base, orb.length, lab.db)
        eps = float(params.get("eps", 0.3))
        delta = float(params.get("delta_cover", 0.9))
        T_grid = [float(t) for t in params.get("T_grid", [2.0, 3.0, 4.0, 5.0])]
        est = katok_estimate(mu, delta, eps, T_grid)
        ok = abs(est.value) <= 0.05
        checks.append({"name": "entropy_zero_on_closed_orbit", "ok": ok,
                       "value": est.value, "tolerance": 0.05})
        return _est_block(est), checks

    if name == "excursion_check":
        census = lab.census()
        full = lab.full_exponent()
        analyzer = lab.analyzer(R)
        restr = restricted_exponent(lab.db, lab.weights, R, analyzer, mode, c)
        alpha = float(params.get("alpha", 0.2))
        R_exc = float(params.get("R", defaults["exc_R"]))
        R_outer = float(params.get("R_outer", defaults["exc_R_outer"]))
        rep = weighted_excursion_sum(
            census, lab.db, "F", R_exc, R_outer, alpha,
            delta_full=full.value, delta_k=restr.value,
            slack=float(params.get("slack", 0.15)),
            c=float(params.get("bin_width", 2.0)))
        ok = rep.rate <= rep.bound
        checks.append({"name": "excursion_bound", "ok": ok,
                       "value": rep.rate, "tolerance": rep.bound})
        block = {"rate": None if rep.rate == MINUS_INF else rep.rate,
                 "bound": rep.bound, "margin": rep.margin,
                 "alpha": rep.alpha, "nested_ok": rep.nested_ok}
        return block, checks

    raise ConfigError(f"unknown analysis {name!r}")


def emit_report(report: dict, out_dir: str, fmt: str = "json") -> list[str]:
    """Write the report with stable field ordering; returns written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if fmt not in ("json", "csv"):
        raise ConfigError(f"unknown format {fmt!r}")
    jpath = os.path.join(out_dir, "report.json")
    with open(jpath, "w") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    paths.append(jpath)
    if fmt == "csv":
        cpath = os.path.join(out_dir, "checks.csv")
        with open(cpath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["schema", "1"])
            w.writerow(["name", "ok", "value", "tolerance"])
            for chk in report["checks"]:
                w.writerow([chk["name"], chk["ok"], chk["value"],
                            chk["tolerance"]])
        paths.append(cpath)
        if "sweep" in report["analyses"]:
            spath = os.path.join(out_dir, "sweep.csv")
            with open(spath, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["schema", "1"])
                w.writerow(["lam", "full", "full_stderr",
                            "restricted", "restricted_stderr"])
                for row in report["analyses"]["sweep"]["rows"]:
                    w.writerow([row["lam"], row["full"]["value"],
                                row["full"]["stderr"],
                                row["restricted"]["value"],
                                row["restricted"]["stderr"]])
            paths.append(spath)
    return paths


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="geodlab",
        description="Numerical laboratory for weighted orbit growth of "
                    "Fuchsian groups")
    ap.add_argument("--preset", choices=sorted(PRESETS), default=None)
    ap.add_argument("--config", default=None, help="JSON scenario file")
    ap.add_argument("--analysis", action="append", default=None,
                    choices=ANALYSES)
    ap.add_argument("--max-dist", type=float, default=None)
    ap.add_argument("--max-words", type=int, default=None)
    ap.add_argument("--out", default="geodlab-out")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    args = ap.parse_args(argv)

    # collect raw overrides first; run_scenario validates and fills defaults
    try:
        if args.config:
            with open(args.config) as fh:
                cfg = json.load(fh)
            if not isinstance(cfg, dict):
                raise ConfigError("config must be a JSON object")
        else:
            cfg = {}
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.preset:
        cfg["preset"] = args.preset
    if args.analysis:
        cfg["analyses"] = args.analysis
    if args.max_dist is not None:
        cfg.setdefault("truncation", {})["max_dist"] = args.max_dist
    if args.max_words is not None:
        cfg.setdefault("truncation", {})["max_words"] = args.max_words

    try:
        report = run_scenario(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    paths = emit_report(report, args.out, args.format)
    for p in paths:
        print(p)
    for chk in report["checks"]:
        verdict = "pass" if chk["ok"] else "FAIL"
        print(f"{verdict} {chk['name']} value={chk['value']}")
    for err in report["errors"]:
        print(f"ERROR {err['analysis']}: {err['error']}", file=sys.stderr)
    return 0 if report["ok"] else 1


if __name__ == "__main__":
    sys.exit(main())
