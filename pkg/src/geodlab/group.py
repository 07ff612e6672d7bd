"""Group presentations, orbit enumeration with deduplication, and
conjugacy-class (closed geodesic) enumeration.

Truncation is the fundamental approximation of the whole artifact: every
database records its truncation bounds and downstream estimates carry them.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .hypgeom import (
    BASEPOINT,
    GeometryError,
    Isometry,
    Point,
    classify,
    dist,
    translation_length,
)

FLOAT_DEDUP_TOL = 1e-8  # Frobenius distance after sign canonicalization


class EnumerationBudgetError(RuntimeError):
    def __init__(self, achieved_depth: int, count: int):
        super().__init__(
            f"element budget exceeded at word length {achieved_depth} "
            f"({count} elements)")
        self.achieved_depth = achieved_depth
        self.count = count


@dataclass(frozen=True)
class Disk:
    """Euclidean disk centered on the real axis."""
    center: float
    radius: float


@dataclass
class Presentation:
    """Named generators with optional Schottky pairing data.

    kind 'free_schottky' asserts the generators pair disjoint disks by
    ping-pong (checked by verify_schottky); 'general' makes no freeness
    assumption and relies on matrix deduplication.
    """
    generators: list[tuple[str, Isometry]]
    kind: str = "free_schottky"
    exact_integer: bool = False
    schottky_disks: list[tuple[Disk, Disk]] | None = None

    def __post_init__(self):
        if self.kind not in ("free_schottky", "general"):
            raise ValueError(f"unknown presentation kind {self.kind!r}")
        for name, g in self.generators:
            classify(g)  # validates the matrix

    @property
    def rank(self) -> int:
        return len(self.generators)

    def letter_matrix(self, letter: int) -> Isometry:
        """Letter +k is generator k-1, letter -k its inverse."""
        g = self.generators[abs(letter) - 1][1]
        return g if letter > 0 else g.inverse()

    def word_matrix(self, word: tuple[int, ...]) -> Isometry:
        m = Isometry.identity()
        for letter in word:
            m = m @ self.letter_matrix(letter)
        return m

    def max_generator_displacement(self) -> float:
        o = BASEPOINT
        return max(dist(o, g.apply(o)) for _, g in self.generators)


def reduce_word(word) -> tuple[int, ...]:
    out: list[int] = []
    for letter in word:
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def is_cyclically_reduced(word: tuple[int, ...]) -> bool:
    if word != reduce_word(word):
        return False
    return not (len(word) >= 2 and word[0] == -word[-1])


def canonical_necklace(word: tuple[int, ...]) -> tuple[int, ...]:
    """Lexicographically minimal cyclic rotation (orientation kept)."""
    n = len(word)
    return min(tuple(word[i:] + word[:i]) for i in range(n)) if n else word


def is_primitive_word(word: tuple[int, ...]) -> bool:
    """True unless the letter sequence is a proper power."""
    n = len(word)
    for p in range(1, n):
        if n % p == 0 and word == word[p:] + word[:p]:
            return False
    return True


# ---------------------------------------------------------------------------
# Schottky certificate


def _circle_through(z1: complex, z2: complex, z3: complex):
    """Center and radius of the circle through three points."""
    ax, ay = z1.real, z1.imag
    bx, by = z2.real, z2.imag
    cx, cy = z3.real, z3.imag
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-14:
        raise GeometryError("collinear points: image is a line, not a circle")
    ux = ((ax ** 2 + ay ** 2) * (by - cy) + (bx ** 2 + by ** 2) * (cy - ay)
          + (cx ** 2 + cy ** 2) * (ay - by)) / d
    uy = ((ax ** 2 + ay ** 2) * (cx - bx) + (bx ** 2 + by ** 2) * (ax - cx)
          + (cx ** 2 + cy ** 2) * (bx - ax)) / d
    center = complex(ux, uy)
    return center, abs(z1 - center)


def _mobius_c(g: Isometry, z: complex) -> complex:
    return (g.a * z + g.b) / (g.c * z + g.d)


@dataclass
class SchottkyReport:
    ok: bool
    disk_margins: list[tuple[str, str, float]]
    mapping_margins: list[tuple[str, float]]
    failures: list[str]


def verify_schottky(p: Presentation, tangency_tol: float = 1e-9) -> SchottkyReport:
    """Ping-pong certificate: disks pairwise disjoint (tangency allowed for a
    parabolic generator's own pair) and each generator maps the exterior of
    its source disk into its target disk."""
    if p.schottky_disks is None:
        raise ValueError("presentation carries no schottky_disks")
    failures: list[str] = []
    names = [name for name, _ in p.generators]

    labeled = []
    for (name, _), (src, tgt) in zip(p.generators, p.schottky_disks):
        labeled.append((f"{name}-", src))
        labeled.append((f"{name}+", tgt))

    disk_margins = []
    for i in range(len(labeled)):
        for j in range(i + 1, len(labeled)):
            la, da = labeled[i]
            lb, db = labeled[j]
            margin = abs(da.center - db.center) - (da.radius + db.radius)
            disk_margins.append((la, lb, margin))
            same_pair = la[:-1] == lb[:-1]
            kind = classify(p.generators[names.index(la[:-1])][1]).kind if same_pair else None
            allow_tangent = same_pair and kind == "parabolic"
            limit = -tangency_tol if allow_tangent else tangency_tol
            if margin < limit:
                failures.append(f"disks {la} and {lb} overlap (margin {margin:.3g})")

    mapping_margins = []
    for (name, g), (src, tgt) in zip(p.generators, p.schottky_disks):
        z1 = complex(src.center + src.radius, 0.0)
        z2 = complex(src.center - src.radius, 0.0)
        z3 = complex(src.center, src.radius)
        try:
            c_img, r_img = _circle_through(_mobius_c(g, z1), _mobius_c(g, z2),
                                           _mobius_c(g, z3))
        except (GeometryError, ZeroDivisionError):
            failures.append(f"generator {name}: image of source circle degenerates")
            continue
        margin = tgt.radius - (abs(c_img - complex(tgt.center, 0.0)) + r_img)
        # a far exterior point must land inside the target disk
        far = complex(src.center + 1e6 * src.radius, 0.0)
        img_far = _mobius_c(g, far)
        inside = abs(img_far - complex(tgt.center, 0.0)) < tgt.radius
        mapping_margins.append((name, margin))
        if margin < -tangency_tol:
            failures.append(
                f"generator {name}: image circle leaves target disk (margin {margin:.3g})")
        if not inside:
            failures.append(f"generator {name}: exterior maps outside target disk")

    return SchottkyReport(ok=not failures, disk_margins=disk_margins,
                          mapping_margins=mapping_margins, failures=failures)


# ---------------------------------------------------------------------------
# Orbit database


@dataclass(frozen=True)
class GroupElement:
    word: tuple[int, ...] | None
    matrix: Isometry
    d_o: float

    def word_key(self):
        return self.word if self.word is not None else ()


def _displacement(m: Isometry) -> float:
    # cosh d(i, m i) = (a^2+b^2+c^2+d^2)/2
    u = (m.a * m.a + m.b * m.b + m.c * m.c + m.d * m.d) / 2.0
    return math.acosh(u) if u > 1.0 else 0.0


class _Dedup:
    """Exact keys for integer groups, tolerance buckets otherwise."""

    def __init__(self, exact: bool):
        self.exact = exact
        self._seen: dict = {}

    def add(self, m: Isometry) -> bool:
        """Returns True if m was new."""
        if self.exact:
            key = tuple(round(x) for x in m.entries())
            if key in self._seen:
                return False
            self._seen[key] = True
            return True
        key = tuple(round(x * 1e6) for x in m.entries())
        entries = np.array(m.entries())
        for dk in self._neighbor_keys(key):
            for other in self._seen.get(dk, ()):
                if np.linalg.norm(entries - other) < FLOAT_DEDUP_TOL:
                    return False
        self._seen.setdefault(key, []).append(entries)
        return True

    @staticmethod
    def _neighbor_keys(key):
        yield key
        # entries straddling a rounding boundary: probe adjacent buckets
        for i in range(4):
            for dv in (-1, 1):
                yield key[:i] + (key[i] + dv,) + key[i + 1:]


class OrbitDatabase:
    """Deduplicated set of group elements with cached d(o, gamma o).

    Immutable after construction; elements sorted by (d_o, word) so results
    are reproducible regardless of traversal order.
    """

    def __init__(self, presentation: Presentation, elements: list[GroupElement],
                 truncation: dict):
        self.presentation = presentation
        self.elements = sorted(elements, key=lambda e: (e.d_o, e.word_key()))
        self.truncation = dict(truncation)
        self._mats = None
        self._points = None
        self._d = None

    def __len__(self):
        return len(self.elements)

    @property
    def matrices(self) -> np.ndarray:
        if self._mats is None:
            self._mats = np.array([e.matrix.entries() for e in self.elements])
        return self._mats

    @property
    def distances(self) -> np.ndarray:
        if self._d is None:
            self._d = np.array([e.d_o for e in self.elements])
        return self._d

    @property
    def points(self) -> np.ndarray:
        """Orbit points gamma o as an (N, 2) array, o = i."""
        if self._points is None:
            m = self.matrices
            a, b, c, d = m[:, 0], m[:, 1], m[:, 2], m[:, 3]
            den = c * c + d * d
            self._points = np.stack([(a * c + b * d) / den, 1.0 / den], axis=1)
        return self._points

    @property
    def horizon(self) -> float:
        """Largest distance with certified-complete enumeration."""
        return self.truncation.get("horizon", self.truncation.get("max_dist", 0.0))

    def export_csv(self, path: str):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["word", "a", "b", "c", "d", "d_o"])
            for e in self.elements:
                word = "" if e.word is None else ".".join(map(str, e.word))
                w.writerow([word] + [f"{v:.17g}" for v in e.matrix.entries()]
                           + [f"{e.d_o:.17g}"])

    @staticmethod
    def import_csv(path: str, presentation: Presentation,
                   truncation: dict) -> "OrbitDatabase":
        elements = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["word", "a", "b", "c", "d", "d_o"]:
                raise ValueError(f"unrecognized orbit CSV header: {header}")
            for row in reader:
                word = tuple(int(t) for t in row[0].split(".")) if row[0] else None
                m = Isometry(*(float(v) for v in row[1:5]))
                elements.append(GroupElement(word, m, float(row[5])))
        return OrbitDatabase(presentation, elements, truncation)


_DEFECT_CACHE: dict = {}


def junction_defect(p: Presentation, bootstrap_dist: float = 12.0,
                    margin: float = 0.03) -> float:
    """Upper bound Delta on the junction defect of reduced words: the Gromov
    product at o of two orbit points whose words start with different
    generators.  Measured on a bootstrap ball (the sup lives on short words
    near the disk extremes and converges fast) and padded by `margin`."""
    key = tuple(g.entries() for _, g in p.generators)
    if key in _DEFECT_CACHE:
        return _DEFECT_CACHE[key]
    db = enumerate_orbit_letters(p, 40, bootstrap_dist)
    pts = db.points
    d = db.distances
    firsts = np.array([abs(e.word[0]) if e.word else 0 for e in db.elements])
    idx = np.nonzero(firsts != 0)[0]
    best = 0.0
    for i in idx:
        dg = idx[firsts[idx] != firsts[i]]
        if len(dg) == 0:
            continue
        dx = pts[dg, 0] - pts[i, 0]
        dy = pts[dg, 1] - pts[i, 1]
        u = (dx * dx + dy * dy) / (2.0 * pts[dg, 1] * pts[i, 1])
        gp = (d[dg] + d[i] - np.arccosh(1.0 + np.maximum(u, 0.0))) / 2.0
        best = max(best, float(gp.max()))
    _DEFECT_CACHE[key] = best + margin
    return _DEFECT_CACHE[key]


def enumerate_orbit(p: Presentation, max_word_len: int, max_dist: float,
                    max_elements: int = 2_000_000,
                    prune_slack: float | None = None) -> OrbitDatabase:
    """Complete ball enumeration: all elements with d(o, gamma o) <= max_dist.

    Free Schottky presentations use syllable depth-first search with the
    junction-defect bound (reaches parabolic elements whose letter length is
    exponential in distance); general presentations fall back to letter BFS
    capped at max_word_len."""
    if p.kind == "free_schottky":
        return enumerate_orbit_syllables(p, max_dist, max_elements)
    return enumerate_orbit_letters(p, max_word_len, max_dist, max_elements,
                                   prune_slack)


def enumerate_orbit_syllables(p: Presentation, max_dist: float,
                              max_elements: int = 2_000_000) -> OrbitDatabase:
    """Depth-first over syllable sequences (adjacent syllables use different
    generators, so each reduced word is produced exactly once).  A child's
    displacement is bounded below by parent displacement + syllable
    displacement - 2 Delta, which certifies both the power loop cutoff and
    branch pruning whenever min generator displacement exceeds 2 Delta."""
    if max_dist <= 0:
        raise ValueError("truncation bounds must be positive")
    delta = junction_defect(p)
    min_disp = min(_displacement(g) for _, g in p.generators)
    gain = min_disp - 2.0 * delta
    if gain <= 0.0:
        raise ValueError(
            f"junction defect {delta:.3f} too large for syllable pruning "
            f"(min generator displacement {min_disp:.3f})")
    gens = {k: p.letter_matrix(k) for k in range(1, p.rank + 1)}
    gens.update({-k: p.letter_matrix(-k) for k in range(1, p.rank + 1)})

    elements = [GroupElement((), Isometry.identity(), 0.0)]
    stack = [((), Isometry.identity(), 0.0)]
    while stack:
        word, mat, d_word = stack.pop()
        junction = 2.0 * delta if word else 0.0
        prev = abs(word[-1]) if word else 0
        for gen in range(1, p.rank + 1):
            if gen == prev:
                continue
            for sign in (1, -1):
                step = gens[sign * gen]
                m = mat
                sylword = word
                sdisp_mat = Isometry.identity()
                while True:
                    m = m @ step
                    sdisp_mat = sdisp_mat @ step
                    sylword = sylword + (sign * gen,)
                    lb = d_word + _displacement(sdisp_mat) - junction
                    if lb > max_dist:
                        break
                    dc = _displacement(m)
                    if dc <= max_dist:
                        elements.append(GroupElement(sylword, m, dc))
                        if len(elements) > max_elements:
                            raise EnumerationBudgetError(len(sylword),
                                                         len(elements))
                        if dc + gain <= max_dist:
                            stack.append((sylword, m, dc))
    truncation = {"max_word_len": None, "max_dist": max_dist,
                  "horizon": max_dist, "method": "syllable_dfs",
                  "junction_defect": delta}
    return OrbitDatabase(p, elements, truncation)


def enumerate_orbit_letters(p: Presentation, max_word_len: int, max_dist: float,
                            max_elements: int = 2_000_000,
                            prune_slack: float | None = None) -> OrbitDatabase:
    """Breadth-first over reduced words, keeping elements with d_o <= max_dist.

    For free Schottky presentations, branches whose displacement already
    exceeds max_dist + slack are pruned (ping-pong displacement growth);
    general presentations expand every reduced word up to max_word_len.
    """
    if max_word_len < 0 or max_dist <= 0:
        raise ValueError("truncation bounds must be positive")
    letters = [k for k in range(1, p.rank + 1)] + [-k for k in range(1, p.rank + 1)]
    letter_mats = {k: p.letter_matrix(k) for k in letters}
    if prune_slack is None:
        prune_slack = (2.0 * p.max_generator_displacement()
                       if p.kind == "free_schottky" else math.inf)

    dedup = _Dedup(p.exact_integer)
    identity = Isometry.identity()
    dedup.add(identity)
    elements = [GroupElement((), identity, 0.0)]
    frontier = [((), identity)]
    depth = 0
    while frontier and depth < max_word_len:
        depth += 1
        nxt = []
        for word, m in frontier:
            last = word[-1] if word else 0
            for k in letters:
                if k == -last:
                    continue
                m2 = m @ letter_mats[k]
                if not dedup.add(m2):
                    continue
                d2 = _displacement(m2)
                if d2 > max_dist + prune_slack:
                    continue
                w2 = word + (k,)
                if d2 <= max_dist:
                    elements.append(GroupElement(w2, m2, d2))
                    if len(elements) > max_elements:
                        raise EnumerationBudgetError(depth, len(elements))
                nxt.append((w2, m2))
        frontier = nxt
    truncation = {"max_word_len": max_word_len, "max_dist": max_dist,
                  "horizon": max_dist if (not frontier or depth == max_word_len)
                  else max_dist}
    if frontier and depth == max_word_len and p.kind == "free_schottky":
        # words longer than the depth limit may still fit inside max_dist
        min_frontier = min(_displacement(m) for _, m in frontier)
        truncation["horizon"] = min(max_dist, min_frontier)
    return OrbitDatabase(p, elements, truncation)


def enumerate_modular_ball(p: Presentation, max_dist: float) -> OrbitDatabase:
    """Exact ball enumeration for the full modular group SL(2, Z):
    cosh d(i, g i) = (a^2+b^2+c^2+d^2)/2, so the ball is a norm ball.

    Words are not attached (elements carry word=None)."""
    if not p.exact_integer:
        raise ValueError("integer ball enumeration requires exact_integer")
    norm_bound = 2.0 * math.cosh(max_dist)
    cmax = int(math.floor(math.sqrt(norm_bound - 1.0)))
    elements = []
    seen = set()

    def emit(a, b, c, d):
        # canonical sign: first nonzero of (a, b, c, d) positive
        for v in (a, b, c, d):
            if v != 0:
                if v < 0:
                    a, b, c, d = -a, -b, -c, -d
                break
        key = (a, b, c, d)
        if key in seen:
            return
        seen.add(key)
        n2 = a * a + b * b + c * c + d * d
        d_o = math.acosh(n2 / 2.0) if n2 > 2 else 0.0
        m = Isometry(float(a), float(b), float(c), float(d))
        elements.append(GroupElement(None, m, d_o))

    for c in range(0, cmax + 1):
        dmax = int(math.floor(math.sqrt(max(norm_bound - c * c, 0.0))))
        for d in range(-dmax, dmax + 1):
            if c == 0 and d == 0:
                continue
            if math.gcd(c, abs(d)) != 1:
                continue
            if c == 0:
                # d = +-1, a = d, b free
                bmax = int(math.floor(math.sqrt(max(norm_bound - 2.0, 0.0))))
                for b in range(-bmax, bmax + 1):
                    emit(d, b * d, 0, d)
                continue
            # solve a d - b c = 1 on the line (a, b) = (a0 + t c, b0 + t d)
            g, x, y = _ext_gcd(d, -c)
            a0, b0 = x, y
            q = c * c + d * d
            lin = a0 * c + b0 * d
            # minimize a^2 + b^2 = q t^2 + 2 lin t + const over integer t
            t0 = int(round(-lin / q))
            t = t0
            while (a0 + t * c) ** 2 + (b0 + t * d) ** 2 + q <= norm_bound:
                emit(a0 + t * c, b0 + t * d, c, d)
                t += 1
            t = t0 - 1
            while (a0 + t * c) ** 2 + (b0 + t * d) ** 2 + q <= norm_bound:
                emit(a0 + t * c, b0 + t * d, c, d)
                t -= 1
    truncation = {"max_word_len": None, "max_dist": max_dist, "horizon": max_dist,
                  "method": "integer_ball"}
    return OrbitDatabase(p, elements, truncation)


def _ext_gcd(a: int, b: int):
    """g, x, y with a x + b y = g."""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


# ---------------------------------------------------------------------------
# Conjugacy classes


@dataclass
class ConjugacyClass:
    rep: GroupElement
    length: float
    primitive: bool


@dataclass
class ConjugacyReport:
    classes: list[ConjugacyClass]
    unresolved: int


def free_necklaces(p: Presentation, max_word_len: int) -> list[tuple[int, ...]]:
    """All cyclically-reduced necklaces (canonical rotations) of word length
    1..max_word_len, orientation kept."""
    letters = [k for k in range(1, p.rank + 1)] + [-k for k in range(1, p.rank + 1)]
    out = set()
    stack = [(k,) for k in letters]
    while stack:
        w = stack.pop()
        if is_cyclically_reduced(w):
            out.add(canonical_necklace(w))
        if len(w) < max_word_len:
            for k in letters:
                if k != -w[-1]:
                    stack.append(w + (k,))
    return sorted(out)


def _syllable_expand(sylls: tuple[tuple[int, int], ...]) -> tuple[int, ...]:
    word: list[int] = []
    for gen, n in sylls:
        letter = gen if n > 0 else -gen
        word.extend([letter] * abs(n))
    return tuple(word)


def free_conjugacy_census(p: Presentation, max_len: float) -> ConjugacyReport:
    """Primitive-and-imprimitive conjugacy classes of the free Schottky group
    with translation length <= max_len, via syllable enumeration.

    Syllable sequences are pruned with the ping-pong estimate
    l(w) >= sum_j d(o, s_j o) - 2 k Delta over the k cyclic junctions, with
    Delta the measured junction defect; each syllable adds at least
    min generator displacement - 2 Delta, which must be positive."""
    rank = p.rank
    gens = {k: p.letter_matrix(k) for k in range(1, rank + 1)}
    gens.update({-k: p.letter_matrix(-k) for k in range(1, rank + 1)})
    delta = junction_defect(p)
    min_disp = min(_displacement(g) for _, g in p.generators)
    if min_disp <= 2.0 * delta:
        raise ValueError(
            f"junction defect {delta:.3f} too large for syllable pruning "
            f"(min generator displacement {min_disp:.3f})")

    disp_cache: dict[tuple[int, int], float] = {}

    def disp(gen: int, n: int) -> float:
        key = (abs(gen), abs(n))
        if key not in disp_cache:
            m = Isometry.identity()
            base = gens[abs(gen)]
            for _ in range(abs(n)):
                m = m @ base
            disp_cache[key] = _displacement(m)
        return disp_cache[key]

    out: dict[tuple, ConjugacyClass] = {}

    def close(sylls: list[tuple[int, int]], mat: Isometry):
        if len(sylls) == 1:
            return  # generator powers handled exactly below
        if abs(sylls[0][0]) == abs(sylls[-1][0]):
            return  # not cyclically reduced in syllable form
        cls = classify(mat)
        if cls.kind != "hyperbolic" or cls.translation_length > max_len:
            return
        word = _syllable_expand(tuple(sylls))
        key = canonical_necklace(word)
        if key not in out:
            out[key] = ConjugacyClass(
                rep=GroupElement(word, mat, _displacement(mat)),
                length=cls.translation_length,
                primitive=is_primitive_word(word),
            )

    # DFS over syllable sequences; cost = sum disp - 2 k Delta lower-bounds
    # the translation length of every cyclic word extending the sequence
    stack: list[tuple[tuple[tuple[int, int], ...], Isometry, float]] = [((), Isometry.identity(), 0.0)]
    while stack:
        sylls, mat, cost = stack.pop()
        prev_gen = abs(sylls[-1][0]) if sylls else 0
        for gen in range(1, rank + 1):
            if gen == prev_gen:
                continue
            for sign in (1, -1):
                step = gens[sign * gen]
                m = mat
                n = 0
                while True:
                    n += 1
                    m = m @ step
                    new_cost = cost + disp(gen, n) - 2.0 * delta
                    if new_cost > max_len:
                        break
                    nxt = sylls + ((sign * gen, n),)
                    close(list(nxt), m)
                    stack.append((nxt, m, new_cost))

    # generator powers, exact (the syllable bound is cross-generator only)
    for gen in range(1, rank + 1):
        cls = classify(gens[gen])
        if cls.kind != "hyperbolic":
            continue
        ell = cls.translation_length
        for sign in (1, -1):
            m = Isometry.identity()
            n = 0
            while (n + 1) * ell <= max_len:
                n += 1
                m = m @ gens[sign * gen]
                word = tuple([sign * gen] * n)
                key = canonical_necklace(word)
                if key not in out:
                    out[key] = ConjugacyClass(
                        rep=GroupElement(word, m, _displacement(m)),
                        length=n * ell, primitive=(n == 1))

    classes = sorted(out.values(), key=lambda c: (c.length, c.rep.word))
    return ConjugacyReport(classes=classes, unresolved=0)


def integer_conjugacy_classes(db: OrbitDatabase, max_len: float,
                              conjugator_bound: float = 6.0) -> ConjugacyReport:
    """Conjugacy classes in an exact-integer database, by trace bucketing and
    explicit conjugator search.  Primitivity via the matrix-power test."""
    trace_cap = 2.0 * math.cosh(max_len / 2.0)
    mats = db.matrices
    traces = mats[:, 0] + mats[:, 3]
    hyper = np.abs(traces) > 2.0 + 1e-12
    small = np.abs(traces) <= trace_cap + 1e-9
    candidates = np.nonzero(hyper & small)[0]

    conj_sel = db.distances <= conjugator_bound
    W = mats[conj_sel]  # (K, 4)
    Wm = W.reshape(-1, 2, 2)
    Winv = np.empty_like(Wm)
    Winv[:, 0, 0] = Wm[:, 1, 1]
    Winv[:, 0, 1] = -Wm[:, 0, 1]
    Winv[:, 1, 0] = -Wm[:, 1, 0]
    Winv[:, 1, 1] = Wm[:, 0, 0]

    def canonical_key(idx: int):
        g = mats[idx].reshape(2, 2)
        conj = np.einsum("kij,jl,klm->kim", Wm, g, Winv)
        conj = np.rint(conj).astype(np.int64).reshape(-1, 4)
        # canonical sign per row
        for r in range(conj.shape[0]):
            row = conj[r]
            for v in row:
                if v != 0:
                    if v < 0:
                        conj[r] = -row
                    break
        keys = [tuple(row) for row in conj]
        return min(keys)

    buckets: dict[int, list[int]] = {}
    for idx in candidates:
        buckets.setdefault(int(abs(round(traces[idx]))), []).append(int(idx))

    classes = []
    unresolved = 0
    for tr, idxs in sorted(buckets.items()):
        reps: dict[tuple, int] = {}
        for idx in idxs:
            key = canonical_key(idx)
            if key not in reps or db.distances[idx] < db.distances[reps[key]]:
                reps[key] = idx
        length = 2.0 * math.acosh(tr / 2.0)
        for key, idx in sorted(reps.items()):
            g = db.elements[idx]
            primitive = not _is_integer_power(g.matrix, db, tr)
            classes.append(ConjugacyClass(rep=g, length=length, primitive=primitive))
    classes.sort(key=lambda c: (c.length, c.rep.matrix.entries()))
    return ConjugacyReport(classes=classes, unresolved=unresolved)


def _is_integer_power(g: Isometry, db: OrbitDatabase, tr: int) -> bool:
    """Is g = h^k for some stored h and k >= 2?"""
    ell = 2.0 * math.acosh(abs(tr) / 2.0)
    mats = db.matrices
    k = 2
    while ell / k > 1e-6:
        root_tr = 2.0 * math.cosh(ell / (2.0 * k))
        near = np.nonzero(np.abs(np.abs(mats[:, 0] + mats[:, 3]) - root_tr) < 1e-6)[0]
        for idx in near:
            h = Isometry(*mats[idx])
            m = h
            for _ in range(k - 1):
                m = m @ h
            if all(abs(u - v) < 1e-6 for u, v in zip(m.entries(), g.entries())):
                return True
        k += 1
        if k > 64:
            break
    return False


def conjugacy_classes(p: Presentation, db: OrbitDatabase,
                      max_len: float) -> ConjugacyReport:
    """Primitive-or-not hyperbolic class representatives with translation
    length <= max_len.  Free case uses necklaces; exact-integer general case
    uses trace buckets with conjugator search."""
    if p.kind == "free_schottky":
        return free_conjugacy_census(p, max_len)
    if p.exact_integer:
        return integer_conjugacy_classes(db, max_len)
    raise NotImplementedError(
        "conjugacy separation for inexact general presentations")
