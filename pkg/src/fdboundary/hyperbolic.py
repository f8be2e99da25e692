"""Hyperbolic metric, geodesics, length and area on the unit disk.

The disk automorphisms are stored as ``(rotation, center)`` pairs acting by
``z -> rotation * (z - center) / (1 - conj(center) * z)``.  Every function in
this module is pure; arrays are accepted wherever a point is expected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

BOUNDARY_EPS = 1e-12
DIAMETER_SWITCH_RADIUS = 1e6


class DomainError(ValueError):
    """A point is not strictly inside the unit disk."""


class DegenerateError(ValueError):
    """Input does not determine the requested object (coincident points, empty path)."""


def _as_complex(z):
    return np.asarray(z, dtype=complex)


def check_inside(z, name="point"):
    z = _as_complex(z)
    if not np.all(np.isfinite(z)):
        raise DomainError(f"{name} is not finite")
    if np.any(np.abs(z) >= 1.0 - BOUNDARY_EPS):
        raise DomainError(f"{name} must satisfy |z| < 1 - {BOUNDARY_EPS:g}")
    return z


def _one_minus_abs2(z):
    r = np.abs(z)
    return (1.0 - r) * (1.0 + r)


def hyperbolic_distance(z1, z2):
    """Hyperbolic distance ``log((1+t)/(1-t))``, ``t = |z1-z2|/|1-z1 conj(z2)|``.

    Evaluated through the equivalent form ``2 asinh(|z1-z2| / sqrt((1-|z1|^2)(1-|z2|^2)))``,
    which keeps full relative accuracy near the unit circle.  Broadcasts over arrays.
    """
    z1 = check_inside(z1, "z1")
    z2 = check_inside(z2, "z2")
    d = np.abs(z1 - z2) / np.sqrt(_one_minus_abs2(z1) * _one_minus_abs2(z2))
    out = 2.0 * np.arcsinh(d)
    return float(out) if out.ndim == 0 else out


def euclidean_radius(hyperbolic_radius):
    """Euclidean radius of the hyperbolic circle of the given radius about 0."""
    return np.tanh(np.asarray(hyperbolic_radius, dtype=float) / 2.0)


@dataclass(frozen=True)
class MobiusTransform:
    """Disk automorphism ``z -> rotation * (z - center) / (1 - conj(center) z)``."""

    rotation: complex = 1.0 + 0.0j
    center: complex = 0.0j

    def __post_init__(self):
        rot = complex(self.rotation)
        c = complex(self.center)
        if abs(abs(rot) - 1.0) > 1e-12:
            raise ValueError(f"|rotation| must be 1, got {abs(rot)!r}")
        if not abs(c) < 1.0:
            raise ValueError(f"|center| must be < 1, got {abs(c)!r}")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "center", c)

    @classmethod
    def identity(cls) -> "MobiusTransform":
        return cls(1.0 + 0.0j, 0.0j)

    @classmethod
    def from_matrix(cls, m) -> "MobiusTransform":
        """Build from a 2x2 complex matrix acting by ``(a z + b) / (c z + d)``.

        The matrix must represent a disk automorphism; the rotation is
        re-projected onto the unit circle to keep composition drift bounded.
        """
        a, b = complex(m[0][0]), complex(m[0][1])
        d = complex(m[1][1])
        rot = a / d
        rot /= abs(rot)
        return cls(rot, -b / a)

    @property
    def matrix(self) -> np.ndarray:
        rot, c = self.rotation, self.center
        return np.array([[rot, -rot * c], [-np.conj(c), 1.0]], dtype=complex)

    def apply_unchecked(self, z):
        """Apply on the closed disk (ideal points allowed)."""
        z = _as_complex(z)
        return self.rotation * (z - self.center) / (1.0 - np.conj(self.center) * z)

    def apply(self, z):
        z = check_inside(z)
        w = self.apply_unchecked(z)
        return complex(w) if w.ndim == 0 else w

    __call__ = apply

    def inverse(self) -> "MobiusTransform":
        return MobiusTransform(np.conj(self.rotation), -self.rotation * self.center)

    def compose(self, other: "MobiusTransform") -> "MobiusTransform":
        """Return ``self o other`` (apply ``other`` first)."""
        return MobiusTransform.from_matrix(self.matrix @ other.matrix)

    def is_identity(self, tol=1e-12) -> bool:
        return abs(self.center) <= tol and abs(self.rotation - 1.0) <= tol

    def fixed_points(self):
        """Fixed points in the complex plane (roots of ``conj(c) z^2 + (rot-1) z - rot c``)."""
        rot, c = self.rotation, self.center
        cb = np.conj(c)
        if abs(cb) < 1e-15:
            if abs(rot - 1.0) < 1e-15:
                return None  # identity: every point is fixed
            return [0j]
        roots = np.roots([cb, rot - 1.0, -rot * c])
        return [complex(r) for r in roots]

    def interior_fixed_point(self, tol=1e-9):
        fps = self.fixed_points()
        if fps is None:
            return 0j
        inside = [z for z in fps if abs(z) < 1.0 - tol]
        return inside[0] if inside else None


def compose(g1: MobiusTransform, g2: MobiusTransform) -> MobiusTransform:
    return g1.compose(g2)


def apply(g: MobiusTransform, z):
    return g.apply(z)


def _adaptive_simpson(f, a, b, tol, max_depth=50):
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        diff = left + right - whole
        if depth >= max_depth or abs(diff) <= 15.0 * eps:
            total += left + right + diff / 15.0
        else:
            stack.append((a, m, fa, flm, fm, left, eps / 2.0, depth + 1))
            stack.append((m, b, fm, frm, fb, right, eps / 2.0, depth + 1))
    return total


def hyperbolic_length(path, rtol=1e-8) -> float:
    """Hyperbolic length of a polyline, integrating ``2|dz|/(1-|z|^2)`` per segment.

    Each segment is integrated by adaptive composite Simpson with relative
    tolerance ``rtol``.
    """
    pts = check_inside(np.atleast_1d(path), "path vertex")
    if pts.size < 2:
        raise DegenerateError("a path needs at least 2 vertices")
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        seg = abs(b - a)
        if seg == 0.0:
            continue

        def density(s, a=a, b=b, seg=seg):
            z = a + s * (b - a)
            return 2.0 * seg / float(_one_minus_abs2(z))

        rough = seg * 2.0 / float(min(_one_minus_abs2(a), _one_minus_abs2(b)))
        total += _adaptive_simpson(density, 0.0, 1.0, rtol * rough)
    return total


def area_density(z):
    """Hyperbolic area density ``4 / (1-|z|^2)^2``."""
    return 4.0 / _one_minus_abs2(z) ** 2


def hyperbolic_area(indicator: Callable[[np.ndarray], np.ndarray], resolution: int,
                    extent: float = 1.0) -> float:
    """Riemann sum of the hyperbolic area density over a cell predicate.

    The square ``[-extent, extent]^2`` is split into ``resolution x resolution``
    cells; a cell contributes when its center is inside the disk and
    ``indicator(center)`` is true.
    """
    if resolution < 1:
        raise ValueError("resolution must be positive")
    h = 2.0 * extent / resolution
    c = -extent + h * (np.arange(resolution) + 0.5)
    z = c[:, None] + 1j * c[None, :]
    inside = np.abs(z) < 1.0 - BOUNDARY_EPS
    sel = np.zeros_like(inside)
    sel[inside] = np.asarray(indicator(z[inside]), dtype=bool)
    return float(np.sum(area_density(z[sel])) * h * h)


@dataclass(frozen=True)
class GeodesicArc:
    """A piece of a hyperbolic straight line.

    ``kind`` is ``"diameter"`` (a segment of a line through the origin),
    ``"circular-arc"`` (an arc of a circle orthogonal to the unit circle) or
    ``"segment"`` (a euclidean segment, used by flat quotients).  Endpoints
    may be ideal points on the unit circle.
    """

    kind: str
    start: complex
    end: complex
    center: complex | None = None
    radius: float | None = None

    def orthogonality_residual(self) -> float:
        if self.kind != "circular-arc":
            return 0.0
        return abs(abs(self.center) ** 2 - self.radius ** 2 - 1.0)

    def sample(self, n: int, trim: float = 0.0) -> np.ndarray:
        """``n`` points along the arc; ``trim`` drops that fraction at each end."""
        s = np.linspace(trim, 1.0 - trim, n)
        if self.kind != "circular-arc":
            return self.start + s * (self.end - self.start)
        a0 = np.angle(self.start - self.center)
        a1 = np.angle(self.end - self.center)
        da = (a1 - a0 + np.pi) % (2.0 * np.pi) - np.pi
        return self.center + self.radius * np.exp(1j * (a0 + s * da))


def _circumcircle(a, b, c):
    d = 2.0 * (a.real * (b.imag - c.imag) + b.real * (c.imag - a.imag) + c.real * (a.imag - b.imag))
    if d == 0.0:
        return None, np.inf
    aa, bb, cc = abs(a) ** 2, abs(b) ** 2, abs(c) ** 2
    ux = (aa * (b.imag - c.imag) + bb * (c.imag - a.imag) + cc * (a.imag - b.imag)) / d
    uy = (aa * (c.real - b.real) + bb * (a.real - c.real) + cc * (b.real - a.real)) / d
    center = complex(ux, uy)
    return center, abs(a - center)


def geodesic_between(z1, z2) -> GeodesicArc:
    """The geodesic segment joining two disk points."""
    z1 = complex(check_inside(z1, "z1"))
    z2 = complex(check_inside(z2, "z2"))
    if z1 == z2:
        raise DegenerateError("geodesic through coincident points is undetermined")
    # the circle through z1, z2 and the inversion of the larger one is orthogonal to |z|=1
    p = z1 if abs(z1) >= abs(z2) else z2
    if abs(p) < 1e-300:
        return GeodesicArc("diameter", z1, z2)
    center, radius = _circumcircle(z1, z2, 1.0 / np.conj(p))
    if center is None or radius > DIAMETER_SWITCH_RADIUS:
        return GeodesicArc("diameter", z1, z2)
    return GeodesicArc("circular-arc", z1, z2, center, float(radius))


def geodesic_from_ideal(a: complex, b: complex) -> GeodesicArc:
    """Full hyperbolic line with ideal endpoints ``a`` and ``b`` on the unit circle."""
    a = complex(a) / abs(a)
    b = complex(b) / abs(b)
    denom = 1.0 + (a * np.conj(b)).real
    if abs(a + b) < 1e-12 or denom < 1e-300:
        return GeodesicArc("diameter", a, b)
    center = (a + b) / denom
    radius = abs(a - center)
    if radius > DIAMETER_SWITCH_RADIUS:
        return GeodesicArc("diameter", a, b)
    return GeodesicArc("circular-arc", a, b, complex(center), float(radius))


def perpendicular_bisector(z1, z2) -> GeodesicArc:
    """The full line ``{p : h(p, z1) = h(p, z2)}`` with its ideal endpoints."""
    z1 = complex(check_inside(z1, "z1"))
    z2 = complex(check_inside(z2, "z2"))
    if z1 == z2:
        raise DegenerateError("bisector of coincident points is undetermined")
    to_origin = MobiusTransform(1.0, z1)
    w = complex(to_origin.apply(z2))
    m = np.tanh(hyperbolic_distance(0j, w) / 4.0)
    u = w / abs(w)
    cos_phi = 2.0 * m / (1.0 + m * m)
    phi = np.arccos(np.clip(cos_phi, -1.0, 1.0))
    ends = u * np.exp(1j * np.array([phi, -phi]))
    back = to_origin.inverse()
    a, b = back.apply_unchecked(ends)
    return geodesic_from_ideal(a, b)
