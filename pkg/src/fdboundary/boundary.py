"""Boundary behaviour of grid maps and modulus probes of the boundary of a grid domain.

Cluster sets are estimated along radial approach sequences at dyadic
distances from ``p0``; each sequence is extrapolated to ``p0`` from its three
finest scales.  Weak flatness and strong accessibility are probed with
condenser capacities (equal to the modulus of the joining curve family) for a
small fixed battery of continua.  Both probes give one-sided evidence only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .distortion import GridGeometry, GridMap
from .modulus import condenser_capacity
from .series import CONVERGES, DIVERGES, classify_partial_sums

MIN_SCALES = 6
EXTENSION_FACTOR = 3.0
BOUNDARY_FACTOR = 2.0
N_DIRECTIONS = 72
ACCESS_FLOOR = 1e-9


class InsufficientResolutionError(ValueError):
    """Too few resolved scales between ``p0`` and the chart."""


@dataclass
class ApproachSequence:
    points: np.ndarray
    images: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.radii) >= 0):
            raise ValueError("approach radii must decrease strictly")

    def extrapolate(self) -> complex:
        """Quadratic Richardson limit from the three finest points (radii halving)."""
        f1, f2, f3 = self.images[-3:]
        return complex((8 * f3 - 6 * f2 + f1) / 3)


@dataclass
class ClusterSetEstimate:
    diameter: float
    hull_points: np.ndarray
    sequences: list
    spacing: float

    @property
    def centroid(self) -> complex:
        return complex(np.mean(self.hull_points))


def oscillating_map(z):
    """``r e^{i theta} -> r e^{i (theta + sin(1/(1 - r)))}`` on the unit disk; no continuous boundary values."""
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        phase = np.where(r < 1, np.sin(1.0 / np.where(r < 1, 1 - r, 1.0)), 0.0)
    return z * np.exp(1j * phase)


def approach_sequences(gmap: GridMap, p0, n_sequences: int = 16, r_max: float | None = None) -> list:
    """Radial approach sequences ``p0 + r_k e^{i phi}`` with ``r_k = r_max 2^{-k}`` down to one grid spacing.

    A direction is kept when at least ``MIN_SCALES`` of its points interpolate
    inside the mask and its three finest such points are consecutive.
    """
    h = gmap.spacing
    r_max = r_max if r_max is not None else 128 * h
    n_scales = int(math.floor(math.log2(r_max / h))) + 1
    if n_scales < MIN_SCALES:
        raise InsufficientResolutionError(f"only {n_scales} dyadic scales between the grid spacing and r_max")
    radii = r_max * 2.0 ** -np.arange(n_scales)
    phis = (np.arange(n_sequences) + 0.5) * 2 * math.pi / n_sequences
    pts = complex(p0) + np.multiply.outer(np.exp(1j * phis), radii)
    vals, ok = gmap.interpolate(pts)
    out = []
    for k in range(n_sequences):
        idx = np.flatnonzero(ok[k])
        if idx.size < MIN_SCALES or np.any(np.diff(idx[-3:]) != 1):
            continue
        out.append(ApproachSequence(pts[k, idx], vals[k, idx], radii[idx]))
    if not out:
        raise InsufficientResolutionError(f"no approach direction resolves {MIN_SCALES} scales")
    return out


def cluster_set_estimate(gmap: GridMap, p0, n_sequences: int = 16, r_max: float | None = None) -> ClusterSetEstimate:
    """Diameter of the extrapolated limits of all approach sequences; near zero means the map extends continuously."""
    seqs = approach_sequences(gmap, p0, n_sequences, r_max)
    limits = np.array([s.extrapolate() for s in seqs])
    diam = float(np.max(np.abs(limits[:, None] - limits[None, :])))
    return ClusterSetEstimate(diam, limits, seqs, gmap.spacing)


@dataclass
class ExtensionVerdict:
    extends: bool
    diameter: float
    threshold: float
    limit_value: complex | None
    n_sequences: int

    def as_dict(self):
        lv = None if self.limit_value is None else [self.limit_value.real, self.limit_value.imag]
        return {"extends": self.extends, "diameter": self.diameter, "threshold": self.threshold,
                "limit_value": lv, "n_sequences": self.n_sequences}


def extension_probe(gmap: GridMap, p0, n_sequences: int = 16, r_max: float | None = None) -> ExtensionVerdict:
    est = cluster_set_estimate(gmap, p0, n_sequences, r_max)
    thr = EXTENSION_FACTOR * gmap.spacing
    ext = est.diameter < thr
    return ExtensionVerdict(bool(ext), est.diameter, thr, est.centroid if ext else None, len(est.sequences))


def _boundary_nodes(mask: np.ndarray) -> np.ndarray:
    pad = np.pad(mask, 1, constant_values=False)
    all_in = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return mask & ~all_in


def _segment_distance(p, a, b):
    """Distance from each point of ``p`` to the nearest segment ``[a_k, b_k]``."""
    d = b - a
    L2 = np.abs(d) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.clip(np.real((p[:, None] - a[None, :]) * np.conj(d)[None, :]) / np.where(L2 > 0, L2, 1.0), 0, 1)
    return np.min(np.abs(p[:, None] - (a[None, :] + s * d[None, :])), axis=1)


@dataclass
class BoundaryLandingReport:
    distances: np.ndarray
    threshold: float
    image_spacing: float

    @property
    def ok(self) -> bool:
        return bool(np.all(self.distances <= self.threshold))


def cluster_on_image_boundary(gmap: GridMap, p0, n_sequences: int = 16, r_max: float | None = None) -> BoundaryLandingReport:
    """Distances from the estimated cluster points to the image of the mask boundary.

    The image boundary is the polyline through images of 8-adjacent boundary
    nodes; the threshold is twice the local image spacing (largest image jump
    between neighbouring boundary nodes within four cells of ``p0``).
    """
    est = cluster_set_estimate(gmap, p0, n_sequences, r_max)
    mask = gmap.domain_mask
    bnd = _boundary_nodes(mask)
    nx, ny = mask.shape
    a_list, b_list = [], []
    for di, dj in ((1, 0), (0, 1), (1, 1), (1, -1)):
        sa = np.s_[max(0, -di): nx - max(0, di), max(0, -dj): ny - max(0, dj)]
        sb = np.s_[max(0, di): nx - max(0, -di), max(0, dj): ny - max(0, -dj)]
        both = bnd[sa] & bnd[sb]
        a_list.append(gmap.samples[sa][both])
        b_list.append(gmap.samples[sb][both])
    a, b = np.concatenate(a_list), np.concatenate(b_list)
    z = gmap.geometry.nodes()
    near_a, near_b = [], []
    for di, dj in ((1, 0), (0, 1)):
        sa = np.s_[: nx - di, : ny - dj]
        sb = np.s_[di:, dj:]
        pair = mask[sa] & mask[sb] & (bnd[sa] | bnd[sb]) & (np.abs(z[sa] - complex(p0)) <= 4 * gmap.spacing)
        near_a.append(gmap.samples[sa][pair])
        near_b.append(gmap.samples[sb][pair])
    jumps = np.abs(np.concatenate(near_a) - np.concatenate(near_b))
    spacing = float(jumps.max()) if jumps.size else gmap.spacing
    return BoundaryLandingReport(_segment_distance(est.hull_points, a, b), BOUNDARY_FACTOR * spacing, spacing)


# modulus probes


def _direction_runs(geometry: GridGeometry, mask, p0, r1, r2, n_dir=N_DIRECTIONS):
    """Contiguous arcs of directions whose segment ``[r1, r2]`` from ``p0`` lies in the mask."""
    phis = (np.arange(n_dir) + 0.5) * 2 * math.pi / n_dir
    rs = np.arange(r1, r2 + 1e-12, 0.5 * geometry.spacing)
    pts = complex(p0) + np.multiply.outer(np.exp(1j * phis), rs)
    i, j, ok = geometry.nearest(pts)
    valid = np.all(ok & mask[i, j], axis=1)
    if valid.all():
        return [phis]
    if not valid.any():
        return []
    start = int(np.flatnonzero(~valid)[0])
    order = np.roll(np.arange(n_dir), -start)
    runs, cur = [], []
    for k in order:
        if valid[k]:
            cur.append(phis[k])
        elif cur:
            runs.append(np.array(cur))
            cur = []
    if cur:
        runs.append(np.array(cur))
    return runs


def _segment_mask(geometry, mask, p0, phi, r1, r2):
    z = geometry.nodes()
    w = (z - complex(p0)) * np.exp(-1j * phi)
    return mask & (np.abs(w.imag) <= 0.5 * geometry.spacing) & (w.real >= r1) & (w.real <= r2)


def _arc_mask(geometry, mask, p0, r, phi1, phi2):
    z = geometry.nodes() - complex(p0)
    ang = np.mod(np.angle(z) - phi1, 2 * math.pi)
    return mask & (np.abs(np.abs(z) - r) <= 0.5 * geometry.spacing) & (ang <= np.mod(phi2 - phi1, 2 * math.pi))


def _scales(geometry, r_U, n_scales):
    h = geometry.spacing
    r_U = r_U if r_U is not None else 2.0 ** (n_scales + 1) * h
    rv = r_U * 2.0 ** -np.arange(1, n_scales + 1)
    if rv[-1] < 2 * h - 1e-12:
        raise InsufficientResolutionError("the finest neighbourhood is below two grid cells")
    return r_U, rv


@dataclass
class FlatnessVerdict:
    weakly_flat: bool
    levels: dict
    r_U: float
    r_V: list
    moduli: list
    sequence_verdict: str
    pairs: int

    def as_dict(self):
        return {"weakly_flat": self.weakly_flat, "levels": self.levels, "r_U": self.r_U, "r_V": self.r_V,
                "moduli": self.moduli, "sequence_verdict": self.sequence_verdict, "pairs": self.pairs}


def weak_flatness_probe(geometry: GridGeometry, domain_mask, p0, N=(1, 2, 5, 10), r_U: float | None = None,
                        n_scales: int = 5) -> FlatnessVerdict:
    """Modulus between radial continua spanning ``r_V < |z - p0| < r_U`` as ``r_V`` halves.

    The battery pairs the two extreme directions of each arc of admissible
    directions and the middles of distinct arcs; the smallest capacity is kept
    per scale.  Level ``N`` passes if some scale reaches it, or if the sequence
    grows without saturating (``series`` verdict diverges).
    """
    mask = np.asarray(domain_mask, bool)
    if n_scales < 5:
        raise InsufficientResolutionError("need at least 5 scales")
    r_U, rv = _scales(geometry, r_U, n_scales)
    runs = _direction_runs(geometry, mask, p0, rv[-1], r_U)
    if not runs:
        raise InsufficientResolutionError("no admissible direction from p0")
    pairs = [(r[0], r[-1]) for r in runs if r.size >= 2]
    mids = [r[r.size // 2] for r in runs]
    pairs += [(mids[a], mids[b]) for a in range(len(mids)) for b in range(a + 1, len(mids))]
    if not pairs:
        raise InsufficientResolutionError("need two admissible directions")
    moduli = []
    for r_V in rv:
        vals = [condenser_capacity(geometry, mask, _segment_mask(geometry, mask, p0, a, r_V, r_U),
                                   _segment_mask(geometry, mask, p0, b, r_V, r_U)).value for a, b in pairs]
        moduli.append(min(vals))
    sv = classify_partial_sums(moduli)
    top = max(moduli)
    levels = {}
    for n in N:
        if top >= n:
            levels[str(n)] = {"passed": True, "basis": "measured"}
        elif sv.verdict == DIVERGES:
            levels[str(n)] = {"passed": True, "basis": "extrapolated"}
        else:
            levels[str(n)] = {"passed": False, "basis": "bounded" if sv.verdict == CONVERGES else "inconclusive"}
    flat = all(v["passed"] for v in levels.values())
    return FlatnessVerdict(flat, levels, float(r_U), rv.tolist(), [float(m) for m in moduli], sv.verdict, len(pairs))


@dataclass
class AccessibilityVerdict:
    accessible: bool
    delta: float
    deltas: list
    scales: list
    family_size: int
    decay: float = 1.0

    def as_dict(self):
        return {"accessible": self.accessible, "delta": self.delta, "deltas": self.deltas,
                "scales": self.scales, "family_size": self.family_size, "decay": self.decay}


def strong_accessibility_probe(geometry: GridGeometry, domain_mask, p0, scales=None, e_run: int = 0,
                               n_scales: int = 4) -> AccessibilityVerdict:
    """Smallest modulus between a fixed continuum ``E`` and a battery of continua ``F`` crossing ``|z - p0| = r_U, r_U/4``.

    For each ``U`` the continuum ``E`` is the radial segment ``[0.4, 0.8] r_U`` in
    the middle of arc ``e_run``; ``F`` ranges over radial segments at the ends
    and middle of every arc and L-shapes (radial, then along ``|z - p0| = r_U``).
    Accessible when every ``delta(U)`` is positive; ``delta`` may depend on
    ``U``, so a slow decay across scales is reported (``decay``) but does not
    fail the probe.
    """
    mask = np.asarray(domain_mask, bool)
    h = geometry.spacing
    if scales is None:
        top = 2.0 ** 6 * h
        scales = top * 2.0 ** -np.arange(n_scales)
    scales = [float(s) for s in scales]
    if min(scales) / 4 < 2 * h - 1e-12:
        raise InsufficientResolutionError("r_U / 4 must be at least two grid cells")
    deltas, size = [], 0
    for r_U in scales:
        r_V = r_U / 4
        runs = _direction_runs(geometry, mask, p0, r_V, r_U)
        if not runs:
            raise InsufficientResolutionError("no admissible direction from p0")
        run = runs[min(e_run, len(runs) - 1)]
        mid = run[run.size // 2]
        E = _segment_mask(geometry, mask, p0, mid, 0.4 * r_U, 0.8 * r_U)
        family = []
        for k, r in enumerate(runs):
            m = r[r.size // 2]
            for phi in (r[0], r[-1], m):
                if k == min(e_run, len(runs) - 1) and phi == mid:
                    continue
                family.append(_segment_mask(geometry, mask, p0, phi, r_V, r_U))
            family.append(_segment_mask(geometry, mask, p0, r[0], r_V, r_U) | _arc_mask(geometry, mask, p0, r_U, r[0], m))
        family = [F for F in family if F.any() and not np.any(F & E)]
        size = max(size, len(family))
        deltas.append(min(condenser_capacity(geometry, mask, E, F).value for F in family))
    ok = min(deltas) > ACCESS_FLOOR
    return AccessibilityVerdict(bool(ok), float(min(deltas)), [float(d) for d in deltas], scales, size,
                                float(deltas[-1] / deltas[0]) if deltas[0] > 0 else 0.0)
