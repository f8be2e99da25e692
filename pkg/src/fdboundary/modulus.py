"""Discrete modulus of curve families, ring families, and the ring inequality check.

The modulus problem ``min sum_c a_c rho_c^2  s.t.  sum_c l_kc rho_c >= 1`` is a
convex QP over cell values.  It is solved in the dual by cyclic projection
(see ``_hildreth``); every reported value is the energy of an explicitly
rescaled admissible density, so it bounds the discrete modulus from above,
and the dual objective gives a matching lower bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.integrate import quad
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.sparse.linalg import spsolve

from ._hildreth import hildreth_sweeps, row_norms
from .distortion import DEGENERATE, DilatationField, GridGeometry, GridMap, dilatation_field
from .hyperbolic import BOUNDARY_EPS, MobiusTransform, hyperbolic_distance

EUCLIDEAN = "euclidean"
HYPERBOLIC = "hyperbolic"
METRIC_MODES = (EUCLIDEAN, HYPERBOLIC)

DEFAULT_GAP_TOL = 1e-6
DEFAULT_SLACK_TOLERANCE = 0.15


class DegenerateCurveError(ValueError):
    """A curve has zero rasterized length, so no density is admissible."""


class InadmissibleXiError(ValueError):
    """The weight function integrates to less than one over the ring."""


@dataclass
class CurveFamily:
    curves: list
    metric_mode: str = HYPERBOLIC

    def __post_init__(self):
        if self.metric_mode not in METRIC_MODES:
            raise ValueError(f"unknown metric mode {self.metric_mode!r}")
        self.curves = [np.asarray(c, dtype=complex).ravel() for c in self.curves]
        if not self.curves:
            raise ValueError("curve family is empty")
        for c in self.curves:
            if c.size < 2:
                raise DegenerateCurveError("every curve needs at least two vertices")
            if self.metric_mode == HYPERBOLIC and np.any(np.abs(c) >= 1 - BOUNDARY_EPS):
                raise ValueError("hyperbolic-mode curves must stay inside the unit disk")

    def __len__(self):
        return len(self.curves)

    def mapped(self, fn) -> "CurveFamily":
        return CurveFamily([fn(c) for c in self.curves], self.metric_mode)

    def bounding_box(self):
        allpts = np.concatenate(self.curves)
        return complex(allpts.real.min(), allpts.imag.min()), complex(allpts.real.max(), allpts.imag.max())


def grid_for(family: CurveFamily, resolution: int = 256, margin: float = 0.01) -> GridGeometry:
    """Square-celled grid over the family's bounding box with ``resolution`` cells on the longer side."""
    lo, hi = family.bounding_box()
    span = max(hi.real - lo.real, hi.imag - lo.imag)
    pad = margin * span + 1e-12
    h = (span + 2 * pad) / resolution
    nx = int(math.ceil((hi.real - lo.real + 2 * pad) / h)) + 1
    ny = int(math.ceil((hi.imag - lo.imag + 2 * pad) / h)) + 1
    return GridGeometry(lo - pad * (1 + 1j) + 0.5 * h * (1 + 1j), h, nx, ny)


def conformal_factor(z):
    """``2 / (1 - |z|^2)``, the ratio of hyperbolic to euclidean length."""
    return 2.0 / (1.0 - np.abs(z) ** 2)


def cell_areas(geometry: GridGeometry, metric_mode: str) -> np.ndarray:
    """Per-cell area weight; hyperbolic cells whose centre is off the disk get ``inf``."""
    if metric_mode == EUCLIDEAN:
        return np.full(geometry.nx * geometry.ny, geometry.cell_area)
    z = geometry.nodes().ravel()
    with np.errstate(divide="ignore"):
        lam = np.where(np.abs(z) < 1, conformal_factor(z), np.inf)
    return lam ** 2 * geometry.cell_area


def rasterize(family: CurveFamily, geometry: GridGeometry, substeps: int = 4) -> sp.csr_matrix:
    """Per-cell length contributions, one row per curve.

    Each segment is cut into pieces of euclidean length at most
    ``spacing / substeps``; a piece's length (times the conformal factor at its
    midpoint in hyperbolic mode) goes to the cell containing the midpoint.
    """
    h = geometry.spacing
    rows, cols, vals = [], [], []
    for k, c in enumerate(family.curves):
        d = np.diff(c)
        seg = np.abs(d)
        m = np.maximum(1, np.ceil(seg * substeps / h)).astype(int)
        idx = np.repeat(np.arange(len(d)), m)
        start = np.repeat(np.cumsum(m) - m, m)
        t = (np.arange(idx.size) - start + 0.5) / m[idx]
        mid = c[idx] + t * d[idx]
        dl = seg[idx] / m[idx]
        if family.metric_mode == HYPERBOLIC:
            dl = dl * conformal_factor(mid)
        i, j, ok = geometry.nearest(mid)
        if not ok.all():
            raise ValueError(f"curve {k} leaves the grid")
        col = i * geometry.ny + j
        u, inv = np.unique(col, return_inverse=True)
        rows.append(np.full(u.size, k))
        cols.append(u)
        vals.append(np.bincount(inv, weights=dl))
    shape = (len(family.curves), geometry.nx * geometry.ny)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape)


@dataclass
class AdmissibleDensity:
    geometry: GridGeometry
    rho: np.ndarray
    metric_mode: str = HYPERBOLIC

    def curve_integrals(self, family: CurveFamily) -> np.ndarray:
        return rasterize(family, self.geometry) @ self.rho.ravel()

    def energy(self) -> float:
        r = self.rho.ravel()
        used = r > 0
        return float(np.sum(cell_areas(self.geometry, self.metric_mode)[used] * r[used] ** 2))


@dataclass
class QPSolution:
    rho: np.ndarray
    mu: np.ndarray
    upper: float
    lower: float
    min_integral: float
    sweeps: int
    converged: bool


def solve_qp(L: sp.csr_matrix, areas: np.ndarray, tol: float = DEFAULT_GAP_TOL, max_sweeps: int = 100_000,
             check_every: int = 10, mu0=None) -> QPSolution:
    """Minimise ``sum a rho^2`` subject to ``L rho >= 1`` until the duality gap is below ``tol`` (relative)."""
    L = sp.csr_matrix(L)
    L.sort_indices()
    indptr = L.indptr.astype(np.int64)
    indices = L.indices.astype(np.int64)
    data = L.data.astype(float)
    ainv = 1.0 / areas
    norms = row_norms(indptr, indices, data, ainv)
    if np.any(norms <= 0):
        raise DegenerateCurveError("a constraint row is empty")
    mu = np.zeros(L.shape[0]) if mu0 is None else np.array(mu0, dtype=float)
    rho = ainv * (L.T @ mu)
    sweeps, converged = 0, False
    upper = lower = math.inf
    mn = 0.0
    while sweeps < max_sweeps:
        n = min(check_every, max_sweeps - sweeps)
        hildreth_sweeps(indptr, indices, data, ainv, norms, mu, rho, n)
        sweeps += n
        mn = float((L @ rho).min())
        energy = float(np.dot(areas * rho, rho))
        lower = 2.0 * float(mu.sum()) - energy
        upper = energy / mn ** 2 if mn > 0 else math.inf
        if upper - lower <= tol * upper:
            converged = True
            break
        # widen the interval between checks as the solve drags on
        check_every = min(2 * check_every, 500)
    scale = 1.0 / mn if mn > 0 else math.inf
    return QPSolution(rho * scale, mu, upper, lower, mn, sweeps, converged)


@dataclass
class ModulusResult:
    value: float
    density: AdmissibleDensity
    lower_bound: float
    converged: bool
    sweeps: int
    n_curves: int

    def __iter__(self):
        yield self.value
        yield self.density


def discrete_modulus(family: CurveFamily, grid: GridGeometry | None = None, resolution: int = 256,
                     tol: float = DEFAULT_GAP_TOL, max_sweeps: int = 100_000) -> ModulusResult:
    """Modulus of ``family`` on ``grid`` (built from the bounding box when omitted)."""
    geometry = grid if grid is not None else grid_for(family, resolution)
    L = rasterize(family, geometry)
    lengths = np.asarray(L.sum(axis=1)).ravel()
    if np.any(lengths <= 0):
        bad = int(np.flatnonzero(lengths <= 0)[0])
        raise DegenerateCurveError(f"curve {bad} has zero rasterized length")
    used = np.unique(L.indices)
    areas = cell_areas(geometry, family.metric_mode)[used]
    if not np.all(np.isfinite(areas)):
        raise ValueError("a curve touches a cell centred off the disk; refine the grid")
    Lc = L[:, used]
    sol = solve_qp(Lc, areas, tol, max_sweeps)
    rho = np.zeros(geometry.nx * geometry.ny)
    rho[used] = sol.rho
    dens = AdmissibleDensity(geometry, rho.reshape(geometry.shape), family.metric_mode)
    return ModulusResult(sol.upper, dens, sol.lower, sol.converged, sol.sweeps, len(family))


def horizontal_segments(a: float, b: float, n: int, origin: complex = 0j, n_vertices: int = 2) -> CurveFamily:
    """Segments ``[x0, x0 + a]`` at ``n`` evenly spread heights of an ``a x b`` rectangle (euclidean)."""
    ys = (np.arange(n) + 0.5) * b / n
    xs = np.linspace(0.0, a, n_vertices)
    return CurveFamily([origin + xs + 1j * y for y in ys], EUCLIDEAN)


def radial_segments(r1: float, r2: float, n: int, center: complex = 0j, n_vertices: int = 2,
                    metric_mode: str = EUCLIDEAN) -> CurveFamily:
    theta = 2 * np.pi * (np.arange(n) + 0.5) / n
    r = np.linspace(r1, r2, n_vertices)
    return CurveFamily([center + r * np.exp(1j * t) for t in theta], metric_mode)


@dataclass(frozen=True)
class RingSpec:
    """Ring ``R1 < h(p, p0) < R2`` about ``p0``."""

    p0: complex
    R1: float
    R2: float

    def __post_init__(self):
        object.__setattr__(self, "p0", complex(self.p0))
        if not (0 < self.R1 < self.R2):
            raise ValueError("ring radii must satisfy 0 < R1 < R2")
        if abs(self.p0) >= 1 - BOUNDARY_EPS:
            raise ValueError("ring center must lie inside the disk")

    def point(self, R, theta):
        """``p0``-centred geodesic polar coordinates."""
        w = np.tanh(np.asarray(R) / 2.0) * np.exp(1j * np.asarray(theta))
        return MobiusTransform(1.0, self.p0).inverse().apply_unchecked(w)

    def circle(self, R, n=512):
        return self.point(R, 2 * np.pi * np.arange(n) / n)

    def exact_modulus(self) -> float:
        """Modulus of the curves joining the two boundary circles inside the ring."""
        return 2 * math.pi / math.log(math.tanh(self.R2 / 2) / math.tanh(self.R1 / 2))

    def area(self) -> float:
        return 2 * math.pi * (math.cosh(self.R2) - math.cosh(self.R1))


def ring_family(spec: RingSpec, n_curves: int, n_vertices: int = 129) -> CurveFamily:
    """Geodesic rays of the ring, from the circle of radius ``R1`` to that of radius ``R2``."""
    if n_curves < 8:
        raise ValueError("ring families need at least 8 curves")
    R = np.linspace(spec.R1, spec.R2, n_vertices)
    theta = 2 * np.pi * (np.arange(n_curves) + 0.5) / n_curves
    return CurveFamily([spec.point(R, t) for t in theta], HYPERBOLIC)


XI_NAMES = ("uniform", "one-over-t", "one-over-t-log")


def make_xi(name: str, R1: float, R2: float) -> Callable:
    """Weight functions normalised to unit integral over ``[R1, R2]``."""
    if name == "uniform":
        c = 1.0 / (R2 - R1)
        return lambda t: np.full(np.shape(t), c)
    if name == "one-over-t":
        c = 1.0 / math.log(R2 / R1)
        return lambda t: c / np.asarray(t)
    if name == "one-over-t-log":
        if R2 >= 1:
            raise InadmissibleXiError("one-over-t-log needs R2 < 1")
        c = 1.0 / math.log(math.log(1 / R1) / math.log(1 / R2))
        return lambda t: c / (np.asarray(t) * np.log(1 / np.asarray(t)))
    raise ValueError(f"unknown xi {name!r}; choose from {XI_NAMES}")


def xi_integral(xi: Callable, R1: float, R2: float) -> float:
    return quad(lambda t: float(xi(np.array(t))), R1, R2, limit=200, epsabs=1e-12, epsrel=1e-10)[0]


def _ring_cells(fld: DilatationField, spec: RingSpec):
    z = fld.geometry.nodes()
    inside_disk = np.abs(z) < 1 - BOUNDARY_EPS
    d = np.full(z.shape, np.inf)
    d[inside_disk] = hyperbolic_distance(z[inside_disk], spec.p0)
    return z, d, (d > spec.R1) & (d < spec.R2)


def _check_covered(fld: DilatationField, spec: RingSpec):
    _, inside = fld.sample(spec.circle(spec.R2, 256))
    if not inside.all():
        raise ValueError("the dilatation field does not cover the ring")


def ring_majorant(fld: DilatationField, spec: RingSpec, xi: Callable) -> float:
    """Riemann sum of ``K xi(h(p, p0))^2 dh`` over the ring; ``inf`` if a degenerate cell lies in it."""
    norm = xi_integral(xi, spec.R1, spec.R2)
    if not norm >= 1 - 1e-6:
        raise InadmissibleXiError(f"xi integrates to {norm:.6g} < 1 over the ring")
    _check_covered(fld, spec)
    z, d, ring = _ring_cells(fld, spec)
    if np.any(ring & (fld.flags == DEGENERATE)):
        return math.inf
    zr, dr = z[ring], d[ring]
    dh = 4 * fld.geometry.cell_area / (1 - np.abs(zr) ** 2) ** 2
    return float(np.sum(fld.k_values[ring] * xi(dr) ** 2 * dh))


@dataclass
class RingReport:
    lhs: float
    rhs: float
    satisfied: bool
    slack: float
    n_curves: int
    lhs_lower_bound: float
    converged: bool
    slack_tolerance: float = DEFAULT_SLACK_TOLERANCE
    notes: list = field(default_factory=list)


def _max_neighbour_gap(curves) -> float:
    arr = np.array(curves)
    return float(np.max(np.abs(np.roll(arr, -1, axis=0) - arr)))


def image_ring_family(gmap: GridMap, spec: RingSpec, n_curves: int, spacing: float,
                      n_vertices: int = 129, max_curves: int = 1 << 14) -> CurveFamily:
    """Images of the ring rays under bilinear interpolation of ``gmap``.

    ``n_curves`` is a floor: the count doubles until neighbouring image curves
    are closer than half the image cell size, so every image cell is crossed.
    """
    n = n_curves
    while True:
        fam = ring_family(spec, n, n_vertices)
        imgs = []
        for c in fam.curves:
            w, ok = gmap.interpolate(c)
            if not ok.all():
                raise ValueError("the ring leaves the map's domain")
            imgs.append(w)
        if _max_neighbour_gap(imgs) <= 0.5 * spacing or 2 * n > max_curves:
            return CurveFamily(imgs, HYPERBOLIC)
        n *= 2


def verify_ring_inequality(gmap: GridMap, spec: RingSpec, xi, n_curves: int = 64,
                           resolution: int = 256, slack_tolerance: float = DEFAULT_SLACK_TOLERANCE,
                           tol: float = 1e-4, k_scale: float = 1.0) -> RingReport:
    """Compare the modulus of the image ring family with the weighted dilatation integral.

    ``k_scale`` multiplies the dilatation on the right-hand side; values below
    one deliberately corrupt the majorant.

    ``lhs`` is a certified upper bound for the discrete image modulus, so a
    discretisation error can raise false alarms but never hide a violation of
    the discrete problem.
    """
    if isinstance(xi, str):
        xi = make_xi(xi, spec.R1, spec.R2)
    fld = dilatation_field(gmap)
    rhs = k_scale * ring_majorant(fld, spec, xi)
    probe = image_ring_family(gmap, spec, 512, math.inf, n_vertices=33)
    geometry = grid_for(probe, resolution, margin=0.05)
    family = image_ring_family(gmap, spec, n_curves, geometry.spacing)
    res = discrete_modulus(family, geometry, tol=tol)
    lhs = res.value
    satisfied = bool(lhs <= rhs * (1 + slack_tolerance))
    slack = 1.0 - lhs / rhs if math.isfinite(rhs) and rhs > 0 else 1.0
    notes = ["lhs is the energy of an admissible density (upper bound of the discrete modulus)"]
    if not res.converged:
        notes.append("duality gap tolerance not reached")
    return RingReport(lhs, rhs, satisfied, slack, len(family), res.lower_bound, res.converged,
                      slack_tolerance, notes)


@dataclass
class GraphModulusResult:
    value: float
    lower_bound: float
    rho: np.ndarray
    rounds: int
    n_paths: int
    converged: bool


def _grid_graph(geometry: GridGeometry, usable: np.ndarray, metric_mode: str):
    nx, ny = geometry.shape
    idx = -np.ones(geometry.shape, dtype=np.int64)
    idx[usable] = np.arange(int(usable.sum()))
    z = geometry.nodes()
    h = geometry.spacing
    src, dst, length = [], [], []
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        sa = np.s_[max(0, -di): nx - max(0, di), max(0, -dj): ny - max(0, dj)]
        sb = np.s_[max(0, di): nx - max(0, -di), max(0, dj): ny - max(0, -dj)]
        a, b, za = idx[sa], idx[sb], z[sa]
        ok = (a >= 0) & (b >= 0)
        ell = np.full(ok.sum(), h * math.hypot(di, dj))
        if metric_mode == HYPERBOLIC:
            zm = za[ok] + 0.5 * h * (di + 1j * dj)
            ell = ell * conformal_factor(zm)
        src.append(a[ok])
        dst.append(b[ok])
        length.append(ell)
    src, dst, length = np.concatenate(src), np.concatenate(dst), np.concatenate(length)
    zu = z[usable]
    if metric_mode == HYPERBOLIC:
        areas = conformal_factor(zu) ** 2 * geometry.cell_area
    else:
        areas = np.full(zu.size, geometry.cell_area)
    return idx, src, dst, length, areas


def graph_modulus(geometry: GridGeometry, domain_mask: np.ndarray, E: np.ndarray, F: np.ndarray,
                  metric_mode: str = EUCLIDEAN, tol: float = 0.01, max_rounds: int = 400,
                  paths_per_round: int = 24) -> GraphModulusResult:
    """Modulus of all 8-connected node paths from ``E`` to ``F`` inside the mask, by constraint generation.

    Each round solves the QP on the current path set, then a multi-source
    shortest-path search under the current density finds violated paths.
    The value reported is the energy of the density rescaled by the shortest
    path length, which is admissible for every grid path.
    """
    usable = np.asarray(domain_mask, bool) | E | F
    if not E.any() or not F.any():
        raise ValueError("E and F must be nonempty")
    if np.any(E & F):
        return GraphModulusResult(math.inf, math.inf, np.zeros(geometry.shape), 0, 0, True)
    idx, src, dst, length, areas = _grid_graph(geometry, usable, metric_mode)
    n = areas.size
    e_nodes = idx[E]
    f_nodes = idx[F]
    all_src = np.concatenate([src, dst])
    all_dst = np.concatenate([dst, src])
    all_len = np.concatenate([length, length])
    graph = sp.csr_matrix((np.ones_like(all_len), (all_src, all_dst)), shape=(n, n))
    order = np.lexsort((all_dst, all_src))
    all_src, all_dst, all_len = all_src[order], all_dst[order], all_len[order]
    zu = geometry.nodes()[usable]
    paths_rows, paths_cols, paths_vals = [], [], []
    mu = np.zeros(0)
    rho = np.zeros(n)
    upper, lower, converged, rounds = math.inf, 0.0, False, 0
    while rounds < max_rounds:
        rounds += 1
        graph.data = 0.5 * all_len * (rho[all_src] + rho[all_dst]) + 1e-14 * all_len
        dist, pred, _ = dijkstra(graph, directed=True, indices=e_nodes, min_only=True, return_predecessors=True)
        df = dist[f_nodes]
        if not np.isfinite(df).any():
            return GraphModulusResult(0.0, 0.0, np.zeros(geometry.shape), rounds, 0, True)
        shortest = float(df.min())
        if shortest > 0 and paths_rows:
            energy = float(np.dot(areas * rho, rho))
            upper = min(upper, energy / shortest ** 2)
        if math.isfinite(upper) and upper - lower <= tol * upper:
            converged = True
            break
        targets = f_nodes[np.argsort(df, kind="stable")[:paths_per_round]]
        k0 = len(mu)
        for t, f in enumerate(targets):
            path = [f]
            while pred[path[-1]] >= 0:
                path.append(pred[path[-1]])
            path = np.array(path)
            coef = np.zeros(len(path))
            if len(path) > 1:
                zp = zu[path]
                seg = np.abs(np.diff(zp))
                if metric_mode == HYPERBOLIC:
                    seg = seg * conformal_factor(0.5 * (zp[1:] + zp[:-1]))
                coef[:-1] += 0.5 * seg
                coef[1:] += 0.5 * seg
            u, inv = np.unique(path, return_inverse=True)
            paths_rows.append(np.full(u.size, k0 + t))
            paths_cols.append(u)
            paths_vals.append(np.bincount(inv, weights=coef))
        mu = np.concatenate([mu, np.zeros(len(targets))])
        L = sp.csr_matrix(
            (np.concatenate(paths_vals), (np.concatenate(paths_rows), np.concatenate(paths_cols))),
            shape=(len(mu), n),
        )
        sol = solve_qp(L, areas, tol=tol * 0.1, max_sweeps=20_000, mu0=mu)
        mu = sol.mu
        rho = (L.T @ mu) / areas
        lower = max(lower, sol.lower)
    out = np.zeros(geometry.shape)
    graph.data = 0.5 * all_len * (rho[all_src] + rho[all_dst])
    dist = dijkstra(graph, directed=True, indices=e_nodes, min_only=True)
    shortest = float(dist[f_nodes].min())
    out[usable] = rho / shortest if shortest > 0 else rho
    return GraphModulusResult(upper, lower, out, rounds, len(mu), converged)


@dataclass
class CapacityResult:
    value: float
    potential: np.ndarray
    n_nodes: int


def condenser_capacity(geometry: GridGeometry, domain_mask: np.ndarray, E: np.ndarray, F: np.ndarray) -> CapacityResult:
    """Modulus of the curves joining ``E`` to ``F`` in the mask, computed as a condenser capacity.

    The potential is 0 on ``E``, 1 on ``F`` and discrete-harmonic (4-neighbour,
    free boundary elsewhere); its Dirichlet energy equals the modulus.  Being
    conformally invariant, the value does not depend on the metric mode.
    """
    E = np.asarray(E, bool)
    F = np.asarray(F, bool)
    if not E.any() or not F.any():
        raise ValueError("E and F must be nonempty")
    if np.any(E & F):
        return CapacityResult(math.inf, np.zeros(geometry.shape), 0)
    usable = np.asarray(domain_mask, bool) | E | F
    nx, ny = geometry.shape
    idx = -np.ones(geometry.shape, dtype=np.int64)
    n = int(usable.sum())
    idx[usable] = np.arange(n)
    src, dst = [], []
    for di, dj in ((1, 0), (0, 1)):
        a = idx[: nx - di, : ny - dj]
        b = idx[di:, dj:]
        ok = (a >= 0) & (b >= 0)
        src.append(a[ok])
        dst.append(b[ok])
    src, dst = np.concatenate(src), np.concatenate(dst)
    adj = sp.csr_matrix((np.ones(src.size), (src, dst)), shape=(n, n))
    adj = adj + adj.T
    _, comp = connected_components(adj, directed=False)
    e_nodes, f_nodes = idx[E], idx[F]
    live = np.isin(comp, np.intersect1d(comp[e_nodes], comp[f_nodes]))
    u = np.zeros(n)
    u[f_nodes] = 1.0
    if not live.any():
        out = np.zeros(geometry.shape)
        return CapacityResult(0.0, out, n)
    fixed = np.zeros(n, bool)
    fixed[e_nodes] = fixed[f_nodes] = True
    free = live & ~fixed
    lap = sp.diags(np.asarray(adj.sum(axis=1)).ravel()) - adj
    lap = lap.tocsr()
    if free.any():
        A = lap[free][:, free].tocsc()
        rhs = -lap[free][:, fixed] @ u[fixed]
        u[free] = spsolve(A, rhs)
    keep = live[src] & live[dst]
    energy = float(np.sum((u[src[keep]] - u[dst[keep]]) ** 2))
    out = np.full(geometry.shape, np.nan)
    out[usable] = np.where(live, u, np.nan)
    return CapacityResult(energy, out, int(live.sum()))
