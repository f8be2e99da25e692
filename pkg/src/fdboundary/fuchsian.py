"""Discrete groups acting on the disk (or the plane), Dirichlet polygons and quotient distance.

Two modes are supported.  ``hyperbolic-disk`` groups are generated by
fixed-point-free disk automorphisms and use the hyperbolic metric.
``flat-torus`` groups are generated by two translations and use the
euclidean metric with unit normalisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import qmc

from .hyperbolic import (
    GeodesicArc,
    MobiusTransform,
    hyperbolic_distance,
    perpendicular_bisector,
)

HYPERBOLIC = "hyperbolic-disk"
FLAT = "flat-torus"
MODES = (HYPERBOLIC, FLAT)

DEFAULT_FRONTIER_CAP = 1_000_000
DUPLICATE_TOL = 1e-9
ACTIVE_TOL = 1e-10
LINE_HALF_LENGTH = 25.0  # hyperbolic arclength sampled on each side of a bisector midpoint


class GroupValidationError(ValueError):
    """Generators do not describe an admissible group."""


class OrbitExplosionError(RuntimeError):
    """The enumeration frontier outgrew its cap; the input is probably not discrete."""


class CertificationError(RuntimeError):
    """The enumerated elements cannot be shown to contain the required minimiser."""


@dataclass(frozen=True)
class Translation:
    """Plane translation ``z -> z + shift``."""

    shift: complex

    def __post_init__(self):
        object.__setattr__(self, "shift", complex(self.shift))

    def apply(self, z):
        w = np.asarray(z, dtype=complex) + self.shift
        return complex(w) if w.ndim == 0 else w

    apply_unchecked = apply
    __call__ = apply

    def inverse(self) -> "Translation":
        return Translation(-self.shift)

    def compose(self, other: "Translation") -> "Translation":
        return Translation(self.shift + other.shift)

    def is_identity(self, tol=1e-12) -> bool:
        return abs(self.shift) <= tol


@dataclass(frozen=True)
class GroupElement:
    """A group element together with the signed generator word that produced it.

    ``word`` entries are ``+k`` for generator ``k`` (1-based) and ``-k`` for its inverse;
    the transform equals the left-to-right composition of the word.
    """

    transform: MobiusTransform | Translation
    word: tuple[int, ...] = ()


@dataclass(frozen=True)
class FuchsianGroup:
    generators: tuple = ()
    mode: str = HYPERBOLIC

    def __post_init__(self):
        gens = tuple(self.generators)
        object.__setattr__(self, "generators", gens)
        if self.mode not in MODES:
            raise GroupValidationError(f"unknown mode {self.mode!r}")
        for k, g in enumerate(gens, 1):
            if self.mode == HYPERBOLIC:
                if not isinstance(g, MobiusTransform):
                    raise GroupValidationError(f"generator {k} is not a disk automorphism")
                if g.is_identity(1e-12):
                    raise GroupValidationError(f"generator {k} is the identity")
                fp = g.interior_fixed_point()
                if fp is not None:
                    raise GroupValidationError(
                        f"generator {k} fixes the interior point {fp:.6g}; the group must act without fixed points"
                    )
            else:
                if not isinstance(g, Translation):
                    raise GroupValidationError(f"generator {k} is not a translation")
                if g.is_identity(1e-12):
                    raise GroupValidationError(f"generator {k} is the identity")
        if self.mode == FLAT:
            if len(gens) != 2:
                raise GroupValidationError("a flat torus needs exactly two translations")
            ratio = gens[0].shift / gens[1].shift
            if abs(ratio.imag) < 1e-12:
                raise GroupValidationError("torus periods must be linearly independent over R")

    @classmethod
    def trivial(cls) -> "FuchsianGroup":
        return cls((), HYPERBOLIC)

    def identity(self):
        return MobiusTransform.identity() if self.mode == HYPERBOLIC else Translation(0j)

    def distance(self, z1, z2):
        if self.mode == HYPERBOLIC:
            return hyperbolic_distance(z1, z2)
        out = np.abs(np.asarray(z1, dtype=complex) - np.asarray(z2, dtype=complex))
        return float(out) if out.ndim == 0 else out

    def signed_generators(self):
        out = []
        for k, g in enumerate(self.generators, 1):
            out.append((k, g))
            out.append((-k, g.inverse()))
        return out

    def max_displacement(self, z0) -> float:
        if not self.generators:
            return 0.0
        return max(self.distance(z0, g.apply(z0)) for _, g in self.signed_generators())


@dataclass
class Enumeration:
    elements: list[GroupElement]
    points: np.ndarray
    distances: np.ndarray
    complete: bool


class _PointIndex:
    """Hash of points rounded to a tolerance lattice, for duplicate detection."""

    def __init__(self, tol):
        self.tol = tol
        self.cells: dict[tuple[int, int], list[complex]] = {}

    def _key(self, z):
        return (math.floor(z.real / self.tol), math.floor(z.imag / self.tol))

    def seen(self, z) -> bool:
        kx, ky = self._key(z)
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for w in self.cells.get((kx + dx, ky + dy), ()):
                    if abs(w - z) <= self.tol:
                        return True
        return False

    def add(self, z):
        self.cells.setdefault(self._key(z), []).append(z)


def enumerate_orbit(group: FuchsianGroup, z0, radius: float, max_word_length: int,
                    frontier_cap: int = DEFAULT_FRONTIER_CAP) -> Enumeration:
    """Breadth-first orbit enumeration with displacement pruning.

    A word is extended only while its point stays within ``radius`` plus the
    largest generator displacement.  ``complete`` is true when the frontier
    died out before ``max_word_length`` was exhausted.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if max_word_length < 1:
        raise ValueError("max_word_length must be >= 1")
    z0 = complex(z0)
    gens = group.signed_generators()
    reach = radius + group.max_displacement(z0)
    ident = GroupElement(group.identity(), ())
    elements, points, dists = [ident], [z0], [0.0]
    index = _PointIndex(DUPLICATE_TOL)
    index.add(z0)
    frontier = [ident]
    for _ in range(max_word_length):
        if not frontier:
            break
        nxt = []
        for elem in frontier:
            last = elem.word[-1] if elem.word else 0
            for s, g in gens:
                if s == -last:
                    continue
                t = elem.transform.compose(g)
                p = complex(t.apply(z0))
                d = float(group.distance(z0, p))
                if d > reach or index.seen(p):
                    continue
                index.add(p)
                new = GroupElement(t, elem.word + (s,))
                elements.append(new)
                points.append(p)
                dists.append(d)
                nxt.append(new)
        if len(nxt) > frontier_cap:
            raise OrbitExplosionError(
                f"orbit frontier reached {len(nxt)} elements (cap {frontier_cap}); generators look non-discrete"
            )
        frontier = nxt
    return Enumeration(elements, np.array(points, dtype=complex), np.array(dists), not frontier)


def orbit(group: FuchsianGroup, z0, radius: float, max_word_length: int,
          frontier_cap: int = DEFAULT_FRONTIER_CAP) -> list[tuple[GroupElement, complex]]:
    """Distinct orbit points ``g(z0)`` within ``radius`` reachable by words of bounded length."""
    en = enumerate_orbit(group, z0, radius, max_word_length, frontier_cap)
    return [(e, complex(p)) for e, p, d in zip(en.elements, en.points, en.distances) if d <= radius]


@lru_cache(maxsize=64)
def _elements_about(group: FuchsianGroup, base: complex, radius: float, depth: int):
    en = enumerate_orbit(group, base, radius, depth)
    keep = en.distances <= radius
    elems = tuple(e for e, k in zip(en.elements, keep) if k)
    return elems, en.complete


def _transform_arrays(elements):
    ts = [e.transform for e in elements]
    if ts and isinstance(ts[0], Translation):
        return np.array([t.shift for t in ts]), None
    rot = np.array([t.rotation for t in ts], dtype=complex)
    cen = np.array([t.center for t in ts], dtype=complex)
    return rot, cen


def _apply_many(elements, z):
    """``out[k, ...] = elements[k](z)``, vectorised."""
    z = np.asarray(z, dtype=complex)
    a, c = _transform_arrays(elements)
    shape = (len(elements),) + (1,) * z.ndim
    if c is None:
        return z[None, ...] + a.reshape(shape)
    a, c = a.reshape(shape), c.reshape(shape)
    return a * (z[None, ...] - c) / (1.0 - np.conj(c) * z[None, ...])


def _certified_elements(group: FuchsianGroup, radius: float, depth: int, base=0j):
    # round the radius up so that nearby requests share one cached enumeration
    r = math.ceil(max(radius, 1e-6) * 4.0) / 4.0
    elems, complete = _elements_about(group, complex(base), r, depth)
    if not complete:
        raise CertificationError(
            f"word length {depth} does not exhaust the orbit ball of radius {r:g}; increase depth"
        )
    return elems


@dataclass
class DirichletPolygon:
    """Intersection of the half-planes ``{h(z, center) <= h(z, g(center))}`` over active ``g``."""

    center: complex
    sides: list[GeodesicArc]
    elements: list[GroupElement]
    mode: str = HYPERBOLIC
    neighbor_points: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def margin(self, z):
        """``min_g h(z, g c) - h(z, c)``; nonnegative exactly on the closed polygon."""
        z = np.asarray(z, dtype=complex)
        if len(self.neighbor_points) == 0:
            return np.full(z.shape, np.inf)
        if self.mode == HYPERBOLIC:
            dist = hyperbolic_distance
        else:
            def dist(a, b):
                return np.abs(a - b)
        nb = self.neighbor_points.reshape((-1,) + (1,) * z.ndim)
        return np.min(dist(z[None, ...], nb), axis=0) - dist(z, self.center)

    def contains(self, z, tol=ACTIVE_TOL):
        return self.margin(z) >= -tol

    def equidistance_residual(self, n=200) -> float:
        worst = 0.0
        dist = hyperbolic_distance if self.mode == HYPERBOLIC else (lambda a, b: np.abs(a - b))
        for arc, gc in zip(self.sides, self.neighbor_points):
            p = arc.sample(n, trim=1e-3)
            worst = max(worst, float(np.max(np.abs(dist(p, self.center) - dist(p, gc)))))
        return worst


def _line_sampler(group: FuchsianGroup, c: complex, gc: complex):
    """Arclength parametrisation ``s -> point`` of the bisector of ``c`` and ``gc``."""
    if group.mode == FLAT:
        mid = 0.5 * (c + gc)
        u = 1j * (gc - c) / abs(gc - c)
        return lambda s: mid + np.asarray(s) * u
    to0 = MobiusTransform(1.0, c)
    back = to0.inverse()
    w = complex(to0.apply(gc))
    m = math.tanh(hyperbolic_distance(0j, w) / 4.0)
    u = w / abs(w)

    def point(s):
        y = 1j * np.tanh(np.asarray(s, dtype=float) / 2.0)
        return back.apply_unchecked(u * (y + m) / (1.0 + m * y))

    return point


def _refine(pred, s_in, s_out, iters=60):
    for _ in range(iters):
        mid = 0.5 * (s_in + s_out)
        if pred(mid):
            s_in = mid
        else:
            s_out = mid
    return s_in


def dirichlet_polygon(group: FuchsianGroup, center=0j, depth: int = 4,
                      samples_per_side: int = 4001) -> DirichletPolygon:
    """Dirichlet polygon about ``center`` from all elements reachable by words of length ``depth``.

    A candidate bisector is kept when a piece of positive length of it
    satisfies every other half-plane constraint to within ``ACTIVE_TOL``.
    """
    center = complex(center)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not group.generators:
        return DirichletPolygon(center, [], [], group.mode)
    for _, g in group.signed_generators():
        if group.mode == HYPERBOLIC and group.distance(center, g.apply(center)) < 1e-12:
            raise GroupValidationError("center is fixed by a generator")
    radius = depth * group.max_displacement(center)
    en = enumerate_orbit(group, center, radius, depth)
    cands = [(e, p) for e, p in zip(en.elements[1:], en.points[1:])]
    cpts = np.array([p for _, p in cands], dtype=complex)
    dist = hyperbolic_distance if group.mode == HYPERBOLIC else (lambda a, b: np.abs(a - b))
    half = LINE_HALF_LENGTH if group.mode == HYPERBOLIC else 2.0 * radius + 1.0
    s_grid = np.linspace(-half, half, samples_per_side)

    def feasible(points, skip):
        others = np.delete(cpts, skip)
        if others.size == 0:
            return np.ones(np.shape(points), bool)
        pts = np.asarray(points, dtype=complex)
        d_c = dist(pts, center)
        d_o = dist(pts[None, ...], others.reshape((-1,) + (1,) * pts.ndim))
        return np.all(d_o - d_c[None, ...] >= -ACTIVE_TOL, axis=0)

    sides, elems, nbs, keys = [], [], [], []
    for k, (elem, gc) in enumerate(cands):
        line = _line_sampler(group, center, gc)
        ok = feasible(line(s_grid), k)
        if not ok.any():
            continue
        idx = np.flatnonzero(ok)
        lo, hi = idx[0], idx[-1]

        def pred(s, k=k, line=line):
            return bool(feasible(line(np.array([s])), k)[0])

        s_lo = s_grid[lo] if lo == 0 else _refine(pred, s_grid[lo], s_grid[lo - 1])
        s_hi = s_grid[hi] if hi == len(s_grid) - 1 else _refine(pred, s_grid[hi], s_grid[hi + 1])
        a, b = complex(line(s_lo)), complex(line(s_hi))
        if float(dist(a, b)) <= 1e-8:
            continue
        if group.mode == HYPERBOLIC:
            full = perpendicular_bisector(center, gc)
            arc = GeodesicArc(full.kind, a, b, full.center, full.radius)
        else:
            arc = GeodesicArc("segment", a, b)
        if group.mode == HYPERBOLIC:
            ang = np.angle(MobiusTransform(1.0, center).apply(gc))
        else:
            ang = np.angle(gc - center)
        sides.append(arc)
        elems.append(elem)
        nbs.append(gc)
        keys.append(float(ang))
    order = np.argsort(keys, kind="stable")
    return DirichletPolygon(
        center,
        [sides[i] for i in order],
        [elems[i] for i in order],
        group.mode,
        np.array([nbs[i] for i in order], dtype=complex),
    )


@dataclass
class PavingReport:
    covered_fraction: float
    multiply_covered_fraction: float
    samples_used: int
    samples_in_band: int
    sample_radius: float


def paving_check(group: FuchsianGroup, polygon: DirichletPolygon, samples: int = 10_000,
                 depth: int = 6, band: float = 1e-6) -> PavingReport:
    """Count polygon translates covering quasi-random points of a certified disk.

    Points are drawn (Halton sequence) in the disk of radius ``R/2`` about the
    polygon center, where ``R = depth * max generator displacement``.  Any
    translate ``g(P)`` meeting that disk has ``h(c, g c) <= R``, so the
    enumeration is exhaustive there.  Samples within ``band`` of a translate's
    boundary are excluded.
    """
    c = polygon.center
    if group.generators:
        big = depth * group.max_displacement(c)
        elems = [e for e, _ in orbit(group, c, big, depth)]
        rs = big / 2.0
    else:
        elems, rs = [GroupElement(group.identity(), ())], 1.0
    u = qmc.Halton(d=2, scramble=False).random(samples + 1)[1:]
    if group.mode == HYPERBOLIC:
        re = math.tanh(rs / 2.0)
        z = re * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])
        z = MobiusTransform(1.0, c).inverse().apply_unchecked(z)
    else:
        z = c + rs * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])
    inverses = [GroupElement(e.transform.inverse(), e.word) for e in elems]
    w = _apply_many(inverses, z)
    m = polygon.margin(w)
    in_band = np.any(np.abs(m) <= band, axis=0)
    count = np.sum(m > band, axis=0)
    keep = ~in_band
    n = int(keep.sum())
    if n == 0:
        return PavingReport(float("nan"), float("nan"), 0, int(in_band.sum()), rs)
    return PavingReport(
        float(np.mean(count[keep] >= 1)),
        float(np.mean(count[keep] >= 2)),
        n,
        int(in_band.sum()),
        float(rs),
    )


def quotient_distance(group: FuchsianGroup, z1, z2, depth: int = 32) -> float:
    """``min_g h(z1, g(z2))`` over a certified enumeration.

    Every competitor ``g`` satisfies ``h(z2, g z2) <= 2 h(z1, z2)``; with the
    base point at the origin that becomes ``h(0, g 0) <= 2 h(0, z2) + 2 h(z1, z2)``.
    """
    z1, z2 = complex(z1), complex(z2)
    direct = float(group.distance(z1, z2))
    if not group.generators or direct == 0.0:
        return direct
    need = 2.0 * float(group.distance(0j, z2)) + 2.0 * direct + 1e-9
    elems = _certified_elements(group, need, depth)
    images = _apply_many(elems, z2)
    return float(np.min(group.distance(z1, images)))


def project(group: FuchsianGroup, z, polygon: DirichletPolygon, depth: int = 32, tol: float = 1e-9) -> complex:
    """Orbit representative of ``z`` in the closed polygon (lexicographic tie-break)."""
    z = complex(z)
    if not group.generators:
        return z
    c = polygon.center
    need = 2.0 * float(group.distance(0j, c)) + 2.0 * float(group.distance(z, c)) + 1e-9
    elems = _certified_elements(group, need, depth)
    reps = _apply_many(elems, z)
    ok = polygon.margin(reps) >= -tol
    if not ok.any():
        raise CertificationError("no orbit representative found in the polygon")
    cand = reps[ok]
    key = np.lexsort((np.round(cand.imag, 12), np.round(cand.real, 12)))
    return complex(cand[key[0]])
