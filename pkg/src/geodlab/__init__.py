"""geodlab: numerical laboratory for weighted orbit growth, periodic-orbit
pressure, conformal boundary measures and recurrence of Fuchsian groups on
the hyperbolic plane."""

__version__ = "0.1.0"

from .hypgeom import (BASEPOINT, BoundaryPoint, GeodesicSegment, Isometry,
                      Point, busemann, classify, dist, shadow_halfangle)
from .group import (Disk, OrbitDatabase, Presentation, enumerate_modular_ball,
                    enumerate_orbit, verify_schottky)
from .potential import (Constant, PotentialField, PotentialSpec, RadialBump,
                        RadialSlope, line_integral, orbital_integrals,
                        period_integral)
from .pressure import (ExponentEstimate, GammaKAnalyzer, critical_exponent,
                       exponent_at_infinity, perturbation_sweep,
                       restricted_exponent)
from .orbits import (build_periodic_orbits, gurevic_pressure,
                     gurevic_pressure_at_infinity, weighted_excursion_sum)
from .psmeasure import (AtomicBoundaryMeasure, build_ps_measure,
                        gibbs_cocycle, shadow_mass_check, u_set_mass_decay)
from .entropy import SampledMeasure, katok_estimate, spanning_weight
from .presets import PRESETS, modular_group, schottky_pair, schottky_parabolic
