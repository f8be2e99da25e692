"""Grid-sampled maps in a single chart and their dilatation.

Nodes sit at ``origin + spacing * (i + 1j * j)`` with ``i`` running along x
and ``j`` along y; every array is indexed ``[i, j]``.  Each node stands for the
square cell of side ``spacing`` centred on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import LinearNDInterpolator

REGULAR = 0
ZERO_DERIVATIVE = 1
DEGENERATE = 2
MASKED = 3
FLAG_NAMES = {
    REGULAR: "regular",
    ZERO_DERIVATIVE: "zero-derivative",
    DEGENERATE: "degenerate-infinite",
    MASKED: "masked",
}
FLAG_CODES = {v: k for k, v in FLAG_NAMES.items()}

DEGENERACY_BAND = 1e-13


class InsufficientStencilError(ValueError):
    """A node lacks the neighbours needed for a finite difference."""


@dataclass(frozen=True)
class GridGeometry:
    origin: complex
    spacing: float
    nx: int
    ny: int

    def __post_init__(self):
        object.__setattr__(self, "origin", complex(self.origin))
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one node per axis")

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    def nodes(self) -> np.ndarray:
        i = np.arange(self.nx)[:, None]
        j = np.arange(self.ny)[None, :]
        return self.origin + self.spacing * (i + 1j * j)

    def index_of(self, z):
        """Fractional node coordinates ``(u, v)`` of chart points."""
        w = (np.asarray(z, dtype=complex) - self.origin) / self.spacing
        return w.real, w.imag

    def nearest(self, z):
        """Nearest node indices and an in-grid flag."""
        u, v = self.index_of(z)
        i = np.rint(u).astype(int)
        j = np.rint(v).astype(int)
        ok = (i >= 0) & (i < self.nx) & (j >= 0) & (j < self.ny)
        return np.clip(i, 0, self.nx - 1), np.clip(j, 0, self.ny - 1), ok

    @classmethod
    def covering(cls, lo: complex, hi: complex, n: int) -> "GridGeometry":
        """Square-celled grid spanning the box ``[lo, hi]`` with ``n`` nodes along the longer side."""
        lo, hi = complex(lo), complex(hi)
        span = max(hi.real - lo.real, hi.imag - lo.imag)
        h = span / (n - 1)
        nx = int(round((hi.real - lo.real) / h)) + 1
        ny = int(round((hi.imag - lo.imag) / h)) + 1
        return cls(lo, h, nx, ny)


@dataclass
class GridMap:
    """Complex samples of a map on a grid, with a mask of nodes that belong to the domain."""

    geometry: GridGeometry
    samples: np.ndarray
    domain_mask: np.ndarray = None

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.shape != self.geometry.shape:
            raise ValueError(f"samples shape {self.samples.shape} != grid shape {self.geometry.shape}")
        if self.domain_mask is None:
            self.domain_mask = np.ones(self.geometry.shape, bool)
        self.domain_mask = np.asarray(self.domain_mask, dtype=bool)
        if self.domain_mask.shape != self.geometry.shape:
            raise ValueError("mask shape does not match the grid")
        if not np.all(np.isfinite(self.samples[self.domain_mask])):
            raise ValueError("samples must be finite on masked-in nodes")

    @property
    def spacing(self):
        return self.geometry.spacing

    @classmethod
    def from_function(cls, fn, geometry: GridGeometry, mask=None) -> "GridMap":
        z = geometry.nodes()
        if callable(mask):
            mask = np.asarray(mask(z), dtype=bool)
        m = np.ones(z.shape, bool) if mask is None else mask
        vals = np.zeros(z.shape, dtype=complex)
        vals[m] = fn(z[m])
        return cls(geometry, vals, m)

    def interpolate(self, z):
        """Bilinear interpolation; returns values and a flag that all four corners are masked-in."""
        g = self.geometry
        u, v = g.index_of(z)
        i0 = np.floor(u).astype(int)
        j0 = np.floor(v).astype(int)
        # points on the last row/column use the cell below them
        i0 = np.where(i0 == g.nx - 1, g.nx - 2, i0)
        j0 = np.where(j0 == g.ny - 1, g.ny - 2, j0)
        ok = (i0 >= 0) & (i0 < g.nx - 1) & (j0 >= 0) & (j0 < g.ny - 1)
        i0c = np.clip(i0, 0, max(g.nx - 2, 0))
        j0c = np.clip(j0, 0, max(g.ny - 2, 0))
        a = u - i0c
        b = v - j0c
        s, m = self.samples, self.domain_mask
        ok &= m[i0c, j0c] & m[i0c + 1, j0c] & m[i0c, j0c + 1] & m[i0c + 1, j0c + 1]
        val = ((1 - a) * (1 - b) * s[i0c, j0c] + a * (1 - b) * s[i0c + 1, j0c]
               + (1 - a) * b * s[i0c, j0c + 1] + a * b * s[i0c + 1, j0c + 1])
        return val, ok


def _axis_difference(s, m, h, axis):
    """Derivative along ``axis``.

    Central differences where both neighbours are in; otherwise the
    second-order one-sided formula when two consecutive neighbours are in,
    and the first-order one as a last resort.
    """
    s = np.moveaxis(s, axis, 0)
    m = np.moveaxis(m, axis, 0)
    n = s.shape[0]
    out = np.full(s.shape, np.nan, dtype=complex)
    ok = np.zeros(s.shape, bool)

    def shifted(k):
        vals = np.zeros_like(s)
        ins = np.zeros(m.shape, bool)
        if k >= 0:
            vals[: n - k] = s[k:]
            ins[: n - k] = m[k:]
        else:
            vals[-k:] = s[: n + k]
            ins[-k:] = m[: n + k]
        return vals, ins

    p1, m_p1 = shifted(1)
    p2, m_p2 = shifted(2)
    q1, m_q1 = shifted(-1)
    q2, m_q2 = shifted(-2)
    rules = [
        (m_p1 & m_q1, (p1 - q1) / (2 * h)),
        (m_p1 & m_p2, (-3 * s + 4 * p1 - p2) / (2 * h)),
        (m_q1 & m_q2, (3 * s - 4 * q1 + q2) / (2 * h)),
        (m_p1, (p1 - s) / h),
        (m_q1, (s - q1) / h),
    ]
    for use, val in rules:
        use = use & m & ~ok
        out[use] = val[use]
        ok |= use
    return np.moveaxis(out, 0, axis), np.moveaxis(ok, 0, axis)


def partials(gmap: GridMap):
    """``(f_x, f_y, ok)`` on every node."""
    h = gmap.spacing
    fx, okx = _axis_difference(gmap.samples, gmap.domain_mask, h, 0)
    fy, oky = _axis_difference(gmap.samples, gmap.domain_mask, h, 1)
    return fx, fy, okx & oky


def wirtinger_field(gmap: GridMap):
    """``(f_z, f_zbar, ok)`` arrays from ``f_z = (f_x - i f_y)/2`` and ``f_zbar = (f_x + i f_y)/2``."""
    fx, fy, ok = partials(gmap)
    return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy), ok


def wirtinger(gmap: GridMap, i: int, j: int) -> tuple[complex, complex]:
    fz, fzb, ok = wirtinger_field(gmap)
    if not ok[i, j]:
        raise InsufficientStencilError(f"node ({i}, {j}) has no usable stencil")
    return complex(fz[i, j]), complex(fzb[i, j])


def jacobian(f_z, f_zbar):
    return np.abs(f_z) ** 2 - np.abs(f_zbar) ** 2


def operator_norm(f_z, f_zbar):
    return np.abs(f_z) + np.abs(f_zbar)


def dilatation_from_derivatives(f_z, f_zbar, zero_scale: float = 1.0):
    """Pointwise ``K`` and flags.

    Both derivatives below ``1e-13 * zero_scale`` gives ``K = 1`` (zero-derivative);
    ``|f_z| - |f_zbar|`` within ``1e-13`` of ``|f_z| + |f_zbar|`` or negative gives
    ``K = inf`` (degenerate-infinite, which includes sense-reversing points).
    """
    a = np.abs(np.asarray(f_z))
    b = np.abs(np.asarray(f_zbar))
    s, d = a + b, a - b
    zero = s <= DEGENERACY_BAND * zero_scale
    degenerate = ~zero & (d <= DEGENERACY_BAND * s)
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(zero, 1.0, np.where(degenerate, np.inf, np.maximum(s / d, 1.0)))
    flags = np.where(zero, ZERO_DERIVATIVE, np.where(degenerate, DEGENERATE, REGULAR)).astype(np.int8)
    return k, flags


@dataclass
class DilatationField:
    """Per-node dilatation with flags; masked nodes carry ``K = 0`` (extension by zero)."""

    geometry: GridGeometry
    k_values: np.ndarray
    flags: np.ndarray
    f_z: np.ndarray = None
    f_zbar: np.ndarray = None

    @property
    def inside(self):
        return self.flags != MASKED

    @classmethod
    def from_function(cls, k_fn, geometry: GridGeometry, mask=None) -> "DilatationField":
        """Synthetic field with prescribed finite ``K >= 1`` (clipped at 1)."""
        z = geometry.nodes()
        if callable(mask):
            mask = np.asarray(mask(z), dtype=bool)
        m = np.ones(z.shape, bool) if mask is None else np.asarray(mask, bool)
        k = np.zeros(z.shape)
        k[m] = np.maximum(np.asarray(k_fn(z[m]), float), 1.0)
        flags = np.where(m, np.where(np.isinf(k), DEGENERATE, REGULAR), MASKED).astype(np.int8)
        return cls(geometry, k, flags)

    def covers(self, points):
        """True where a point lies within half a cell of the grid."""
        return self.geometry.nearest(points)[2]

    def sample(self, points):
        """Nearest-node lookup: ``(K, inside)``; points off the grid count as outside."""
        i, j, ok = self.geometry.nearest(points)
        inside = ok & self.inside[i, j]
        return np.where(inside, self.k_values[i, j], 0.0), inside


def dilatation_field(gmap: GridMap) -> DilatationField:
    fz, fzb, ok = wirtinger_field(gmap)
    # a derivative is "zero" relative to the size of difference quotients of the samples
    norms = (np.abs(fz) + np.abs(fzb))[ok]
    vals = np.abs(gmap.samples[gmap.domain_mask])
    scale = max(float(norms.max()) if norms.size else 0.0,
                float(vals.max()) / gmap.spacing if vals.size else 0.0)
    k, flags = dilatation_from_derivatives(np.where(ok, fz, 0), np.where(ok, fzb, 0), max(scale, 1e-300))
    # nodes with no stencil (isolated within the mask) are treated as outside
    flags = np.where(ok, flags, MASKED).astype(np.int8)
    k = np.where(ok, k, 0.0)
    return DilatationField(gmap.geometry, k, flags, fz, fzb)


@dataclass
class FiniteDistortionReport:
    finite_fraction: float
    flagged_cells: list = field(default_factory=list)


def finite_distortion_check(fld: DilatationField) -> FiniteDistortionReport:
    inside = fld.inside
    n = int(inside.sum())
    if n == 0:
        return FiniteDistortionReport(float("nan"), [])
    finite = np.isfinite(fld.k_values) & inside
    bad = np.argwhere(inside & ~finite)
    return FiniteDistortionReport(float(finite.sum()) / n, [tuple(int(x) for x in ij) for ij in bad])


def resample(gmap: GridMap, chart_fn, geometry: GridGeometry, mask=None) -> GridMap:
    """Grid map of ``f o chart_fn`` on a new grid, via bilinear interpolation of ``f``."""
    z = geometry.nodes()
    vals, ok = gmap.interpolate(chart_fn(z))
    m = ok if mask is None else (ok & mask)
    return GridMap(geometry, np.where(m, vals, 0), m)


def grid_inverse(gmap: GridMap, geometry: GridGeometry) -> GridMap:
    """Samples of ``f^{-1}`` on ``geometry`` by piecewise-linear interpolation over the image points."""
    m = gmap.domain_mask
    w = gmap.samples[m]
    z = gmap.geometry.nodes()[m]
    interp = LinearNDInterpolator(np.column_stack([w.real, w.imag]), z)
    q = geometry.nodes()
    vals = interp(q.real.ravel(), q.imag.ravel()).reshape(q.shape)
    ok = np.isfinite(vals)
    return GridMap(geometry, np.where(ok, vals, 0), ok)
