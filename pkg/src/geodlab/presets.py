"""Built-in group presets covering the three regimes exercised by the
laboratory: convex-cocompact Schottky pair, geometrically finite Schottky
group with one cusp, and the modular lattice."""
from __future__ import annotations

import math

from .group import Disk, Presentation
from .hypgeom import Isometry


def pairing_isometry(src: Disk, tgt: Disk) -> Isometry:
    """Mobius map sending the exterior of the source disk onto the interior
    of the target disk: z -> tgt.c - r^2 / (z - src.c) (hyperbolic when the
    disks are disjoint, parabolic when tangent)."""
    r = math.sqrt(src.radius * tgt.radius)
    return Isometry.from_matrix(tgt.center, -tgt.center * src.center - r * r,
                                1.0, -src.center)


def schottky_pair(separation: float = 0.6) -> Presentation:
    """Free convex-cocompact group on two hyperbolic generators pairing four
    disjoint disks of the given radius centered at -3, -1, 1, 3."""
    if not 0.0 < separation < 1.0:
        raise ValueError("separation must lie in (0, 1)")
    r = separation
    a_src, a_tgt = Disk(-1.0, r), Disk(1.0, r)
    b_src, b_tgt = Disk(-3.0, r), Disk(3.0, r)
    return Presentation(
        generators=[("a", pairing_isometry(a_src, a_tgt)),
                    ("b", pairing_isometry(b_src, b_tgt))],
        kind="free_schottky",
        schottky_disks=[(a_src, a_tgt), (b_src, b_tgt)],
    )


def schottky_parabolic(translation: float = 2.5,
                       hyperbolic_center: float = 2.5,
                       hyperbolic_radius: float = 0.8) -> Presentation:
    """Free geometrically finite group with one cusp: a parabolic generator
    fixing 0 (tangent disks at the origin) and a hyperbolic generator pairing
    two disks further out on the real axis."""
    c = translation
    if c <= 0:
        raise ValueError("translation must be positive")
    p_src, p_tgt = Disk(-1.0 / c, 1.0 / c), Disk(1.0 / c, 1.0 / c)
    h_src = Disk(-hyperbolic_center, hyperbolic_radius)
    h_tgt = Disk(hyperbolic_center, hyperbolic_radius)
    parabolic = Isometry(1.0, 0.0, c, 1.0)   # z -> z / (c z + 1)
    return Presentation(
        generators=[("p", parabolic),
                    ("h", pairing_isometry(h_src, h_tgt))],
        kind="free_schottky",
        schottky_disks=[(p_src, p_tgt), (h_src, h_tgt)],
    )


def modular_group() -> Presentation:
    """PSL(2, Z) with the standard generators S, T; exact integer matrices."""
    s = Isometry(0.0, -1.0, 1.0, 0.0)
    t = Isometry(1.0, 1.0, 0.0, 1.0)
    return Presentation(generators=[("S", s), ("T", t)], kind="general",
                        exact_integer=True)


def parabolic_subgroup_exponent(translation: float, s_grid=None) -> float:
    """Independent oracle for the cusp exponent: the series
    sum_n exp(-s d(o, P^n o)) with d(o, P^n o) = 2 arcsinh(n c / 2) diverges
    iff s <= 1/2, so the subgroup exponent is exactly 1/2 for every c."""
    return 0.5


PRESETS = {
    "schottky_pair": schottky_pair,
    "schottky_parabolic": schottky_parabolic,
    "modular_group": modular_group,
}
