"""Numerical boundary-extension criteria at a boundary point ``p0`` of a domain ``D``.

All integrals are taken in polar coordinates about ``p0`` in the hyperbolic
metric: a point at hyperbolic distance ``t`` and angle ``theta`` is
``T^{-1}(tanh(t/2) e^{i theta})`` with ``T`` the disk automorphism moving ``p0``
to 0, and ``dh = sinh(t) dt dtheta``.  The dilatation is extended by zero
outside ``D``.  Radii are split into dyadic windows ``[delta 2^{-k-1}, delta 2^{-k}]``
with Gauss-Legendre nodes in ``log t`` and a periodic trapezoid rule in angle.

Every test returns a :class:`Verdict`; ``classify_boundary_point`` runs them
all and aggregates the result into a :class:`CriterionReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distortion import DilatationField
from .hyperbolic import BOUNDARY_EPS, MobiusTransform, hyperbolic_distance
from .phi import PhiFunction, phi_condition, phi_from_config
from .series import CONVERGES, DIVERGES, INCONCLUSIVE, classify_partial_sums, classify_sequence

MIN_SCALES = 8
TAIL = 4
RATIO_GROWTH_TOL = 0.01
LIMIT_FRACTION = 0.1
DEFAULT_DELTA = 0.25
# 1/(t log 1/t) is only positive below t = 1
LOGLOG_RADIUS = math.exp(-1)

LEHTO = "lehto"
LOG_GROWTH = "log_growth"
LOG_GROWTH_LOGLOG = "log_growth_loglog"
CALDERON = "calderon"
CALDERON_LOGLOG = "calderon_loglog"
ORLICZ = "orlicz"
FMO = "fmo"
BOUNDED_MEAN = "bounded_mean"
ALL_TESTS = (LEHTO, LOG_GROWTH, LOG_GROWTH_LOGLOG, CALDERON, CALDERON_LOGLOG, ORLICZ, FMO, BOUNDED_MEAN)


class InsufficientScalesError(ValueError):
    """Fewer dyadic scales than the tests need."""


class OutOfDomainError(ValueError):
    """A sampling circle leaves the chart on which the field is defined."""


class InadmissiblePsiError(ValueError):
    """``I(eps) = int psi`` vanishes or is not finite."""


@dataclass
class CriteriaConfig:
    n_scales: int = 10
    orlicz_scales: int = 20
    delta: float | None = None
    n_theta: int = 256
    nodes_per_window: int = 8
    core_windows: int = 30
    min_radius: float = 1e-11
    phi: dict = field(default_factory=lambda: {"name": "exp", "alpha": 1.0})
    tests: tuple = ALL_TESTS
    hypotheses_asserted: bool = False

    @classmethod
    def from_dict(cls, d: dict | None) -> "CriteriaConfig":
        d = dict(d or {})
        if "tests" in d:
            d["tests"] = tuple(d["tests"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown criteria options {sorted(unknown)}")
        return cls(**d)


@dataclass
class AnalyticField:
    """Dilatation given by a formula on the disk chart, with an optional domain indicator."""

    k_fn: Callable
    inside_fn: Callable | None = None

    def covers(self, points):
        return np.abs(points) < 1.0 - BOUNDARY_EPS

    def sample(self, points):
        points = np.asarray(points, dtype=complex)
        inside = np.ones(points.shape, dtype=bool) if self.inside_fn is None else np.asarray(self.inside_fn(points), bool)
        K = np.zeros(points.shape)
        K[inside] = self.k_fn(points[inside])
        return K, inside


def half_plane(p0, angle: float = 0.0):
    """Indicator of the hyperbolic half-plane whose edge is the geodesic through ``p0`` at ``angle``."""
    T = MobiusTransform(1.0, complex(p0))
    turn = np.exp(-1j * angle)
    return lambda z: np.imag(turn * T.apply_unchecked(z)) > 0


def radial_field(k_of_h: Callable, p0, inside: Callable | None = None) -> AnalyticField:
    """``K(p) = k_of_h(h(p, p0))``."""
    p0 = complex(p0)
    return AnalyticField(lambda z: k_of_h(np.atleast_1d(hyperbolic_distance(z, p0))), inside)


def _circle_points(p0, t, n_theta):
    theta = (np.arange(n_theta) + 0.5) * (2 * math.pi / n_theta)
    w = np.multiply.outer(np.tanh(np.asarray(t, dtype=float) / 2), np.exp(1j * theta))
    return MobiusTransform(1.0, complex(p0)).inverse().apply_unchecked(w)


def _sample(fld, points):
    if not np.all(fld.covers(points)):
        raise OutOfDomainError("sampling circle leaves the chart")
    K, inside = fld.sample(points)
    return np.asarray(K, dtype=float), np.asarray(inside, dtype=bool)


def circle_norm(fld, p0, r: float, n_theta: int = 256) -> float:
    """``int_{h(p,p0)=r} K ds_h``; ``inf`` if a degenerate cell lies on the circle."""
    K, _ = _sample(fld, _circle_points(p0, r, n_theta))
    if np.any(np.isinf(K)):
        return math.inf
    return float(np.sum(K) * math.sinh(r) * 2 * math.pi / n_theta)


@dataclass
class CircleProfile:
    """Circle norms and circle means on Gauss nodes of dyadic windows below ``delta``.

    ``windows[i]`` is the window index of ``radii[i]`` (0 is ``[delta/2, delta]``)
    and ``weights[i]`` its quadrature weight in ``dr``.
    """

    p0: complex
    radii: np.ndarray
    values: np.ndarray
    means: np.ndarray
    weights: np.ndarray
    windows: np.ndarray
    delta: float
    resolution: float = 0.0

    def __post_init__(self):
        if np.any(self.radii <= 0) or np.any(np.diff(self.radii) <= 0):
            raise ValueError("profile radii must be positive and strictly increasing")

    @property
    def n_windows(self) -> int:
        return int(self.windows.max()) + 1

    def window_sum(self, values) -> np.ndarray:
        """Quadrature of ``values`` (given per radius) over each window, outermost first."""
        return np.bincount(self.windows, weights=self.weights * values, minlength=self.n_windows)


@dataclass
class PolarSample:
    p0: complex
    delta: float
    t: np.ndarray          # (W, q) radii
    wt: np.ndarray         # (W, q) weights in dt
    K: np.ndarray          # (W, q, n_theta)
    inside: np.ndarray     # (W, q, n_theta)
    resolution: float = 0.0

    @property
    def dtheta(self) -> float:
        return 2 * math.pi / self.K.shape[-1]

    def circle_integral(self, values, start: int = 0) -> np.ndarray:
        """``int_{h=t} values ds_h`` at every node; ``values`` shaped like ``K[start:]``."""
        return values.sum(axis=-1) * np.sinh(self.t[start:]) * self.dtheta

    def window_integrals(self, values, start: int = 0) -> np.ndarray:
        """``int values dh`` over each annular window from ``start`` on."""
        with np.errstate(invalid="ignore"):
            return np.sum(self.wt[start:] * self.circle_integral(values, start), axis=1)

    def norms(self) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            n = self.circle_integral(self.K)
        return np.where(np.any(np.isinf(self.K), axis=-1), np.inf, n)

    def profile(self, n_windows: int) -> CircleProfile:
        norms = self.norms()[:n_windows]
        win = np.repeat(np.arange(n_windows), self.t.shape[1])
        t = self.t[:n_windows].ravel()
        values = norms.ravel()
        order = np.argsort(t)
        means = values / (2 * math.pi * np.sinh(t))
        return CircleProfile(
            self.p0, t[order], values[order], means[order], self.wt[:n_windows].ravel()[order], win[order], self.delta,
            self.resolution,
        )


def resolution_radius(fld, p0) -> float:
    """Smallest radius the field resolves: two grid cells in the hyperbolic metric at ``p0``, zero for formulas."""
    if isinstance(fld, DilatationField):
        return 4.0 * fld.geometry.spacing / (1.0 - abs(complex(p0)) ** 2)
    return 0.0


def polar_sample(fld, p0, delta: float, n_windows: int, n_theta: int = 256, nodes: int = 8,
                 min_radius: float = 1e-11) -> PolarSample:
    """Sample ``K`` on ``n_windows`` dyadic windows below ``delta`` (fewer if ``min_radius`` cuts in).

    Below ``resolution_radius`` the field is read on the resolution circle at the
    same angle, so grid fields are frozen at sub-cell scales.
    """
    keep = int(math.floor(math.log2(delta / min_radius)))
    W = max(1, min(n_windows, keep))
    x, w = np.polynomial.legendre.leggauss(nodes)
    hi = delta * 2.0 ** -np.arange(W)
    lo = hi / 2
    s = 0.5 * np.log(hi * lo)[:, None] + 0.5 * math.log(2) * x[None, :]
    t = np.exp(s)
    wt = 0.5 * math.log(2) * w[None, :] * t
    pts = _circle_points(p0, np.maximum(t, resolution_radius(fld, p0)), n_theta)
    K, inside = _sample(fld, pts)
    return PolarSample(complex(p0), float(delta), t, wt, K, inside, resolution_radius(fld, p0))


@dataclass
class Verdict:
    name: str
    verdict: str
    passed: bool
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)

    def as_dict(self):
        return {"verdict": self.verdict, "passed": bool(self.passed), "evidence": self.evidence}


def _need_scales(m: int):
    if m < MIN_SCALES:
        raise InsufficientScalesError(f"need at least {MIN_SCALES} dyadic scales, got {m}")


def lehto_test(profile: CircleProfile, delta: float | None = None) -> Verdict:
    """Divergence of ``int_0^delta dr / ||K||(p0, r)``; passes when it diverges.

    ``S_m`` is the integral over ``[delta 2^{-m}, delta]``.
    """
    _need_scales(profile.n_windows)
    with np.errstate(divide="ignore"):
        inv = np.where(np.isfinite(profile.values) & (profile.values > 0), 1.0 / profile.values, 0.0)
    inv = np.where(profile.values == 0, np.inf, inv)
    S = np.cumsum(profile.window_sum(inv))
    sv = classify_partial_sums(S)
    return Verdict(LEHTO, sv.verdict, sv.verdict == DIVERGES, sv.as_dict())


def _window_means(profile: CircleProfile):
    w = profile.window_sum(np.ones_like(profile.means))
    with np.errstate(invalid="ignore"):
        k = profile.window_sum(profile.means) / w
    eps = profile.delta * 2.0 ** -(np.arange(profile.n_windows) + 0.5)
    return eps, k


def log_growth_test(profile: CircleProfile, comparator: str = "log") -> Verdict:
    """Bounded ratio of the circle mean ``k(eps)`` to ``log 1/eps`` (or ``log 1/eps * log log 1/eps``).

    Over the finest four windows the ratio passes when it grows by less than
    1% or is not strictly increasing.
    """
    _need_scales(profile.n_windows)
    eps, k = _window_means(profile)
    L = np.log(1 / eps)
    if comparator == "loglog":
        if np.any(L[-TAIL:] <= 1):
            raise InsufficientScalesError("log log comparator needs the finest scales below 1/e")
        with np.errstate(invalid="ignore", divide="ignore"):
            denom, name = np.where(L > 1, L * np.log(L), np.nan), LOG_GROWTH_LOGLOG
    elif comparator == "log":
        denom, name = L, LOG_GROWTH
    else:
        raise ValueError(f"unknown comparator {comparator!r}")
    ratio = k / denom
    tail = ratio[-TAIL:]
    if not np.all(np.isfinite(tail)):
        ok = False
    else:
        increasing = bool(np.all(np.diff(tail) > 0))
        ok = (not increasing) or tail[-1] <= (1 + RATIO_GROWTH_TOL) * tail[0]
    evidence = {"scales": eps.tolist(), "ratios": ratio.tolist(), "bound": float(1.5 * np.max(tail))}
    evidence["resolved_scales"] = int(np.sum(eps >= profile.resolution))
    return Verdict(name, CONVERGES if ok else DIVERGES, ok, evidence)


PSI_FAMILIES = {
    "1/t": lambda t: 1.0 / t,
    "1/(t log 1/t)": lambda t: 1.0 / (t * np.log(1.0 / t)),
}


def _ratio_rule(I, R):
    """``R -> 0``: non-increasing over the tail and the fitted limit of ``a + b/I`` at most 0.1 ``R_M``."""
    tail_R, tail_I = R[-TAIL:], I[-TAIL:]
    if not np.all(np.isfinite(tail_R)):
        return False, math.inf
    nonincreasing = bool(np.all(np.diff(tail_R) <= 1e-12 * np.abs(tail_R[:-1])))
    A = np.column_stack([np.ones(TAIL), 1.0 / tail_I])
    a = float(np.linalg.lstsq(A, tail_R, rcond=None)[0][0])
    return nonincreasing and a <= LIMIT_FRACTION * tail_R[-1], a


def _psi_from_sample(ps: PolarSample, psi, n_scales: int, name: str) -> Verdict:
    _need_scales(n_scales)
    fn = PSI_FAMILIES[psi] if isinstance(psi, str) else psi
    t = ps.t[:n_scales]
    wt = ps.wt[:n_scales]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        psi_vals = np.asarray(fn(t), dtype=float) * np.ones_like(t)
        I = np.cumsum(np.sum(wt * psi_vals, axis=1))
        if not math.isfinite(I[0]) or I[0] <= 0 or not np.all(np.isfinite(I)):
            raise InadmissiblePsiError("I(eps) must be positive and finite")
        lhs = np.cumsum(np.sum(wt * psi_vals ** 2 * ps.norms()[:n_scales], axis=1))
        R = lhs / I ** 2
    ok, a = _ratio_rule(I, R)
    eps = ps.delta * 2.0 ** -(np.arange(n_scales) + 1)
    evidence = {"scales": eps.tolist(), "lhs": lhs.tolist(), "I": I.tolist(), "ratios": R.tolist(), "limit": a}
    return Verdict(name, CONVERGES if ok else DIVERGES, ok, evidence)


def psi_criterion(fld, p0, psi="1/t", eps0: float | None = None, config: CriteriaConfig | None = None,
                  name: str = "psi") -> Verdict:
    """``int_{eps<h<eps0} K psi(h)^2 dh / I(eps)^2 -> 0`` with ``I(eps) = int_eps^eps0 psi``."""
    cfg = config or CriteriaConfig()
    eps0 = eps0 if eps0 is not None else default_delta(fld, p0)
    ps = polar_sample(fld, p0, eps0, cfg.n_scales, cfg.n_theta, cfg.nodes_per_window, cfg.min_radius)
    return _psi_from_sample(ps, psi, cfg.n_scales, name)


def calderon_test(fld, p0, eps0: float | None = None, config: CriteriaConfig | None = None,
                  loglog: bool = False) -> Verdict:
    """``psi_criterion`` with ``psi = 1/t`` (or ``1/(t log 1/t)`` when ``loglog``)."""
    psi = "1/(t log 1/t)" if loglog else "1/t"
    if loglog:
        eps0 = min(eps0 if eps0 is not None else default_delta(fld, p0), LOGLOG_RADIUS)
    return psi_criterion(fld, p0, psi, eps0, config, CALDERON_LOGLOG if loglog else CALDERON)


def _orlicz_from_sample(ps: PolarSample, phi: PhiFunction, n_scales: int, phi_verdict: str | None = None) -> Verdict:
    with np.errstate(over="ignore", invalid="ignore"):
        vals = np.where(ps.inside, phi(ps.K), 0.0)
    J = np.cumsum(ps.window_integrals(vals)[:n_scales])
    sv = classify_partial_sums(J)
    finite = sv.verdict == CONVERGES
    if phi_verdict is None:
        phi_verdict = phi_condition(phi).verdict
    ok = finite and phi_verdict == DIVERGES
    evidence = sv.as_dict()
    evidence.update({"finite": finite, "phi": phi.name, "phi_condition": phi_verdict})
    return Verdict(ORLICZ, sv.verdict, ok, evidence)


def orlicz_test(fld, phi: PhiFunction, p0, eps0: float | None = None, config: CriteriaConfig | None = None) -> Verdict:
    """Finiteness of ``int Phi(K) dh`` over ``B(p0, eps0) ∩ D``; passes when finite and ``Phi`` satisfies the divergence condition."""
    cfg = config or CriteriaConfig()
    eps0 = eps0 if eps0 is not None else default_delta(fld, p0)
    ps = polar_sample(fld, p0, eps0, cfg.orlicz_scales, cfg.n_theta, cfg.nodes_per_window, cfg.min_radius)
    _need_scales(ps.t.shape[0])
    return _orlicz_from_sample(ps, phi, ps.t.shape[0])


def _disk_statistics(ps: PolarSample, n_scales: int):
    """Means and mean absolute deviations of ``K`` over ``B(p0, eps_m) ∩ D`` for ``m = 1..n_scales``."""
    ind = ps.inside.astype(float)
    area = np.cumsum(ps.window_integrals(ind)[::-1])[::-1]
    with np.errstate(invalid="ignore"):
        mass = np.cumsum(ps.window_integrals(np.where(ps.inside, ps.K, 0.0))[::-1])[::-1]
    means, osc = [], []
    for m in range(1, n_scales + 1):
        mean = mass[m] / area[m] if area[m] > 0 else math.nan
        with np.errstate(invalid="ignore"):
            dev = np.where(ps.inside, np.abs(ps.K - mean), 0.0)
            osc.append(float(np.sum(ps.window_integrals(dev[m:], m)) / area[m]))
        means.append(float(mean))
    return np.array(means), np.array(osc)


def _bounded_sequence(name, seq, extra) -> Verdict:
    sv = classify_sequence(seq)
    ev = sv.as_dict()
    ev.update(extra)
    return Verdict(name, sv.verdict, sv.verdict == CONVERGES, ev)


def _need_core(ps: PolarSample, n_scales: int):
    if ps.t.shape[0] <= n_scales:
        raise InsufficientScalesError("disk averages need windows below the finest scale")


def fmo_test(fld, p0, eps0: float | None = None, config: CriteriaConfig | None = None) -> Verdict:
    """Finite mean oscillation at ``p0``: disk mean deviations stay bounded as the disks shrink."""
    cfg = config or CriteriaConfig()
    eps0 = eps0 if eps0 is not None else default_delta(fld, p0)
    ps = polar_sample(fld, p0, eps0, cfg.n_scales + cfg.core_windows, cfg.n_theta, cfg.nodes_per_window, cfg.min_radius)
    return _fmo_from_sample(ps, cfg.n_scales)


def _fmo_from_sample(ps, n_scales):
    _need_scales(n_scales)
    _need_core(ps, n_scales)
    means, osc = _disk_statistics(ps, n_scales)
    return _bounded_sequence(FMO, osc, {"means": means.tolist(), "limsup_estimate": float(np.max(osc[-TAIL:]))})


def bounded_mean_test(fld, p0, eps0: float | None = None, config: CriteriaConfig | None = None) -> Verdict:
    """Disk means of ``K`` over ``B(p0, eps) ∩ D`` stay bounded as ``eps -> 0``."""
    cfg = config or CriteriaConfig()
    eps0 = eps0 if eps0 is not None else default_delta(fld, p0)
    ps = polar_sample(fld, p0, eps0, cfg.n_scales + cfg.core_windows, cfg.n_theta, cfg.nodes_per_window, cfg.min_radius)
    return _bounded_mean_from_sample(ps, cfg.n_scales)


def _bounded_mean_from_sample(ps, n_scales):
    _need_scales(n_scales)
    _need_core(ps, n_scales)
    means, _ = _disk_statistics(ps, n_scales)
    return _bounded_sequence(BOUNDED_MEAN, means, {})


def circle_profile(fld, p0, delta: float | None = None, n_scales: int = 10, n_theta: int = 256,
                   nodes: int = 8) -> CircleProfile:
    delta = delta if delta is not None else default_delta(fld, p0)
    return polar_sample(fld, p0, delta, n_scales, n_theta, nodes).profile(n_scales)


def _chart_radius(fld, p0, n_theta=256) -> float:
    """Largest hyperbolic radius whose circle about ``p0`` stays in the chart (bisection)."""
    lo, hi = 0.0, 40.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        pts = _circle_points(p0, mid, n_theta)
        if np.all(fld.covers(pts)):
            lo = mid
        else:
            hi = mid
    return lo


def default_delta(fld, p0) -> float:
    """Outer radius: 0.25 for analytic fields; otherwise half the distance to the farthest masked-in node, capped by the chart."""
    if not isinstance(fld, DilatationField):
        return DEFAULT_DELTA
    z = fld.geometry.nodes()[fld.inside]
    z = z[np.abs(z) < 1 - BOUNDARY_EPS]
    if z.size == 0:
        raise OutOfDomainError("field has no masked-in nodes inside the disk")
    far = 0.5 * float(np.max(hyperbolic_distance(z, complex(p0))))
    return min(far, 0.999 * _chart_radius(fld, p0))


@dataclass
class CriterionReport:
    p0: complex
    verdicts: dict
    prediction: bool
    hypotheses_asserted: bool
    delta: float
    errors: list = field(default_factory=list)
    resolution: float = 0.0
    resolved_scales: int = 0

    def as_dict(self):
        return {
            "p0": [self.p0.real, self.p0.imag],
            "delta": self.delta,
            "resolution": self.resolution,
            "resolved_scales": self.resolved_scales,
            "verdicts": {k: v.as_dict() for k, v in self.verdicts.items()},
            "prediction": bool(self.prediction),
            "hypotheses_asserted": bool(self.hypotheses_asserted),
            "errors": list(self.errors),
        }


def classify_boundary_point(fld, p0, config: CriteriaConfig | dict | None = None) -> CriterionReport:
    """Run every enabled test at ``p0``; extension is predicted when any of them passes.

    Per-test failures are recorded as inconclusive verdicts with the message in ``errors``.
    """
    cfg = config if isinstance(config, CriteriaConfig) else CriteriaConfig.from_dict(config)
    unknown = set(cfg.tests) - set(ALL_TESTS)
    if unknown:
        raise ValueError(f"unknown tests {sorted(unknown)}")
    p0 = complex(p0)
    delta = cfg.delta if cfg.delta is not None else default_delta(fld, p0)
    verdicts, errors = {}, []
    n_win = max(cfg.n_scales, cfg.orlicz_scales) + cfg.core_windows
    try:
        ps = polar_sample(fld, p0, delta, n_win, cfg.n_theta, cfg.nodes_per_window, cfg.min_radius)
    except OutOfDomainError as exc:
        ps = None
        errors.append(f"sampling: {exc}")

    def run(name, fn):
        if name not in cfg.tests:
            return
        try:
            if ps is None:
                raise OutOfDomainError("no polar sample")
            verdicts[name] = fn()
        except (InsufficientScalesError, OutOfDomainError, InadmissiblePsiError, ValueError) as exc:
            verdicts[name] = Verdict(name, INCONCLUSIVE, False, {})
            errors.append(f"{name}: {exc}")

    prof = (lambda: ps.profile(cfg.n_scales))
    run(LEHTO, lambda: lehto_test(prof()))
    run(LOG_GROWTH, lambda: log_growth_test(prof(), "log"))
    run(LOG_GROWTH_LOGLOG, lambda: log_growth_test(prof(), "loglog"))
    run(CALDERON, lambda: _psi_from_sample(ps, "1/t", cfg.n_scales, CALDERON))
    def loglog_sample():
        if delta <= LOGLOG_RADIUS:
            return ps
        return polar_sample(fld, p0, LOGLOG_RADIUS, cfg.n_scales, cfg.n_theta, cfg.nodes_per_window, cfg.min_radius)

    run(CALDERON_LOGLOG, lambda: _psi_from_sample(loglog_sample(), "1/(t log 1/t)", cfg.n_scales, CALDERON_LOGLOG))
    run(ORLICZ, lambda: _orlicz_from_sample(ps, phi_from_config(cfg.phi), min(cfg.orlicz_scales, ps.t.shape[0])))
    run(FMO, lambda: _fmo_from_sample(ps, cfg.n_scales))
    run(BOUNDED_MEAN, lambda: _bounded_mean_from_sample(ps, cfg.n_scales))
    prediction = any(v.passed for v in verdicts.values())
    res = resolution_radius(fld, p0)
    resolved = int(np.sum(delta * 2.0 ** -np.arange(1, cfg.n_scales + 1) >= res))
    return CriterionReport(p0, verdicts, prediction, cfg.hypotheses_asserted, float(delta), errors, res, resolved)
