"""Convex Orlicz-type functions and the six equivalent divergence conditions on them.

With ``H = log Phi`` the forms are::

    tau     int  dtau / (tau Phi^{-1}(tau))     up to infinity
    hprime  int  H'(t) dt / t                   up to infinity
    stieltjes int dH(t) / t                     up to infinity
    h_over_t2 int H(t) dt / t^2                 up to infinity
    h_inv_t int  H(1/t) dt                      down to 0
    eta     int  d eta / H^{-1}(eta)            up to infinity

Each is evaluated over a sequence of windows whose lengths grow
geometrically in the form's natural variable, and the resulting partial sums
are classified by ``series.classify_partial_sums``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import lambertw

from .series import CONVERGES, DIVERGES, INCONCLUSIVE, classify_partial_sums

FORMS = ("tau", "hprime", "stieltjes", "h_over_t2", "h_inv_t", "eta")
BISECTION_TOL = 1e-10
GL_X, GL_W = np.polynomial.legendre.leggauss(16)


class InvalidPhiError(ValueError):
    """Phi fails the monotonicity or convexity check."""


def _gl(f, a, b):
    """16-point Gauss-Legendre rule on ``[a, b]`` for a vectorised ``f``."""
    x = 0.5 * (b - a) * GL_X + 0.5 * (a + b)
    return 0.5 * (b - a) * float(np.sum(GL_W * f(x)))


def _bisect_increasing(fn, targets, lo, hi, tol=BISECTION_TOL):
    """Vectorised bisection for ``fn(t) = target`` with ``fn`` nondecreasing.

    Brackets are doubled as needed; targets beyond ``fn(1e300)`` map to ``inf``.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    lo = np.full(targets.shape, float(lo))
    hi = np.full(targets.shape, float(hi))
    with np.errstate(over="ignore", invalid="ignore"):
        low_side = fn(hi) < targets
        while low_side.any() and hi.max() < 1e300:
            lo = np.where(low_side, hi, lo)
            hi = np.where(low_side, 4 * hi + 1, hi)
            low_side = fn(hi) < targets
        unreachable = low_side
        for _ in range(2000):
            if np.all((hi - lo <= tol * np.maximum(1.0, np.abs(hi))) | unreachable):
                break
            mid = 0.5 * (lo + hi)
            below = fn(mid) < targets
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
    return np.where(unreachable, np.inf, 0.5 * (lo + hi))


@dataclass(frozen=True)
class PhiFunction:
    """Nondecreasing convex ``Phi`` on ``[0, inf)``.

    ``log_evaluator`` returns ``H = log Phi`` without overflow where supplied;
    ``inverse_evaluator`` is optional and falls back to bisection.
    """

    name: str
    evaluator: Callable
    inverse_evaluator: Callable | None = None
    t0: float = 0.0
    log_evaluator: Callable | None = None
    log_derivative: Callable | None = None
    params: dict = field(default_factory=dict)
    log_inverse_evaluator: Callable | None = None

    def __call__(self, t):
        return self.evaluator(np.asarray(t, dtype=float))

    def H(self, t):
        t = np.asarray(t, dtype=float)
        if self.log_evaluator is not None:
            return self.log_evaluator(t)
        with np.errstate(divide="ignore"):
            return np.log(self.evaluator(t))

    def H_prime(self, t):
        """``H'`` (closed form if given, else a central difference); zero where ``Phi`` vanishes."""
        t = np.asarray(t, dtype=float)
        if self.log_derivative is not None:
            out = self.log_derivative(t)
        else:
            step = 1e-6 * np.maximum(t, 1.0)
            out = (self.H(t + step) - self.H(np.maximum(t - step, 0))) / (t + step - np.maximum(t - step, 0))
        return np.where(t <= self.t0, 0.0, out)

    def inverse(self, tau: float) -> float:
        if self.inverse_evaluator is not None:
            return float(self.inverse_evaluator(tau))
        return float(_bisect_increasing(self, tau, self.t0, max(2 * self.t0, 1.0))[0])

    def H_inverse(self, eta):
        """``H^{-1}`` (closed form if given, else bisection); vectorised over ``eta``."""
        if self.log_inverse_evaluator is not None:
            with np.errstate(over="ignore"):
                out = np.asarray(self.log_inverse_evaluator(np.asarray(eta, dtype=float)), dtype=float)
            return float(out) if np.ndim(eta) == 0 else out
        out = _bisect_increasing(self.H, eta, self.t0, max(2 * self.t0, 1.0))
        return float(out[0]) if np.ndim(eta) == 0 else out

    def validate(self, upper: float = 50.0, n: int = 2001) -> None:
        t = np.linspace(0.0, upper, n)
        with np.errstate(over="ignore"):
            v = self(t)
        finite = np.isfinite(v)
        v, tt = v[finite], t[finite]
        if np.any(v < 0):
            raise InvalidPhiError(f"{self.name}: Phi takes negative values")
        if np.any(np.diff(v) < -1e-12 * np.maximum(1, np.abs(v[1:]))):
            raise InvalidPhiError(f"{self.name}: Phi is not nondecreasing")
        second = v[2:] - 2 * v[1:-1] + v[:-2]
        if np.any(second < -1e-9 * np.maximum(1, np.abs(v[1:-1]))):
            raise InvalidPhiError(f"{self.name}: Phi is not convex on the sample lattice")
        for s in tt[tt > self.t0 + 1e-6][::200]:
            back = self.inverse(float(self(s)))
            if abs(back - s) > 1e-8 * max(1.0, s):
                raise InvalidPhiError(f"{self.name}: inverse mismatch at t={s:g}")


def exp_phi(alpha: float = 1.0) -> PhiFunction:
    return PhiFunction(
        f"exp({alpha:g}t)",
        lambda t: np.exp(alpha * t),
        lambda tau: max(math.log(tau) / alpha, 0.0),
        0.0,
        lambda t: alpha * t,
        lambda t: np.full(np.shape(t), float(alpha)),
        {"alpha": alpha},
        lambda eta: np.maximum(eta / alpha, 0.0),
    )


def power_phi(p: float) -> PhiFunction:
    if p < 1:
        raise InvalidPhiError("t^p is convex only for p >= 1")
    with_log = lambda t: p * np.log(np.maximum(t, 1e-300))
    return PhiFunction(f"t^{p:g}", lambda t: t ** p, lambda tau: tau ** (1.0 / p), 0.0, with_log,
                       lambda t: p / np.maximum(t, 1e-300), {"p": p}, lambda eta: np.exp(eta / p))


def tlogt_phi() -> PhiFunction:
    def ev(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(t > 1, t * np.log(np.where(t > 1, t, 2.0)), 0.0)

    def inv(tau):
        return 1.0 if tau <= 0 else float((tau / lambertw(tau).real).real)

    def logev(t):
        with np.errstate(divide="ignore", invalid="ignore"):
            safe = np.where(t > 1, t, 2.0)
            return np.where(t > 1, np.log(safe) + np.log(np.log(safe)), -np.inf)

    def dlog(t):
        safe = np.where(t > 1, t, 2.0)
        return np.where(t > 1, 1 / safe + 1 / (safe * np.log(safe)), 0.0)

    def loginv(eta):
        # t log t = e^eta  <=>  t = e^w with w + log w = eta
        eta = np.asarray(eta, dtype=float)
        w = np.maximum(eta - np.log(np.maximum(eta, 1.0)), 0.5)
        for _ in range(60):
            w = np.maximum(w - (w + np.log(w) - eta) / (1 + 1 / w), 1e-12)
        return np.exp(w)

    return PhiFunction("t log t", ev, inv, 1.0, logev, dlog, {}, loginv)


def exp_sqrt_phi() -> PhiFunction:
    """``e^{sqrt t}`` for ``t >= 1``, continued below 1 by its tangent line so the function is convex."""
    e = math.e

    def ev(t):
        return np.where(t >= 1, np.exp(np.sqrt(np.maximum(t, 1))), 0.5 * e * (1 + t))

    def inv(tau):
        return math.log(tau) ** 2 if tau >= e else 2 * tau / e - 1

    def logev(t):
        return np.where(t >= 1, np.sqrt(np.maximum(t, 1)), np.log(0.5 * e * (1 + t)))

    def dlog(t):
        return np.where(t >= 1, 0.5 / np.sqrt(np.maximum(t, 1)), 1 / (1 + t))

    def loginv(eta):
        eta = np.asarray(eta, dtype=float)
        return np.where(eta >= 1, eta ** 2, 2 * np.exp(eta) / e - 1)

    return PhiFunction("exp(sqrt t)", ev, inv, 0.0, logev, dlog, {}, loginv)


def tabulated_phi(t_values, phi_values, name: str = "tabulated") -> PhiFunction:
    """Piecewise-linear ``Phi`` through a strictly increasing table, extended linearly past the last node."""
    t = np.asarray(t_values, dtype=float)
    v = np.asarray(phi_values, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0) or np.any(np.diff(v) <= 0):
        raise InvalidPhiError("tabulated Phi needs strictly increasing t and Phi columns")
    slope = (v[-1] - v[-2]) / (t[-1] - t[-2])

    def ev(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= t[-1], np.interp(x, t, v), v[-1] + slope * (x - t[-1]))

    t0 = float(t[0]) if v[0] <= 0 else 0.0
    return PhiFunction(name, ev, None, t0, None, None, {"t": t.tolist(), "phi": v.tolist()})


REGISTRY = {
    "exp": exp_phi,
    "power": power_phi,
    "tlogt": lambda: tlogt_phi(),
    "exp_sqrt": lambda: exp_sqrt_phi(),
}


def phi_from_config(cfg: dict) -> PhiFunction:
    """``{"name": "exp", "alpha": 1}``, ``{"name": "power", "p": 2}``, ``{"name": "tabulated", "t": [...], "phi": [...]}``."""
    name = cfg.get("name", "exp")
    if name == "exp":
        return exp_phi(float(cfg.get("alpha", 1.0)))
    if name == "power":
        return power_phi(float(cfg.get("p", 2.0)))
    if name == "tlogt":
        return tlogt_phi()
    if name == "exp_sqrt":
        return exp_sqrt_phi()
    if name == "tabulated":
        return tabulated_phi(cfg["t"], cfg["phi"])
    raise ValueError(f"unknown Phi {name!r}")


def _geometric_windows(start, n, ratio=2.0):
    edges = start * ratio ** np.arange(n + 1)
    return list(zip(edges[:-1], edges[1:]))


def _additive_windows(start, width, n):
    """Windows ``[start + (2^k - 1) w, start + (2^{k+1} - 1) w]``."""
    k = np.arange(n + 1)
    edges = start + (2.0 ** k - 1) * width
    return list(zip(edges[:-1], edges[1:]))


def _partial_sums(pieces):
    return np.cumsum(pieces)


def form_partial_sums(phi: PhiFunction, form: str, windows: int = 40, start: float | None = None):
    """Partial sums of one form over ``windows`` windows beyond its starting point."""
    ts = start if start is not None else 2.0 * max(phi.t0, 1.0)
    if form == "hprime":
        pieces = [_gl(lambda s: phi.H_prime(np.exp(s)), math.log(a), math.log(b))
                  for a, b in _geometric_windows(ts, windows)]
    elif form == "stieltjes":
        pieces = []
        for a, b in _geometric_windows(ts, windows):
            knots = np.geomspace(a, b, 257)
            dH = np.diff(phi.H(knots))
            pieces.append(float(np.sum(dH / np.sqrt(knots[1:] * knots[:-1]))))
    elif form == "h_over_t2":
        pieces = [_gl(lambda s: phi.H(np.exp(s)) * np.exp(-s), math.log(a), math.log(b))
                  for a, b in _geometric_windows(ts, windows)]
    elif form == "h_inv_t":
        delta = 1.0 / ts
        pieces = [_gl(lambda s: phi.H(np.exp(-s)) * np.exp(s), math.log(a), math.log(b))
                  for a, b in [(delta * 2.0 ** -(k + 1), delta * 2.0 ** -k) for k in range(windows)]]
    elif form in ("eta", "tau"):
        eta0 = float(phi.H(ts))
        width = max(1.0, abs(eta0))
        pieces = []
        for a, b in _additive_windows(eta0, width, windows):
            x = 0.5 * (b - a) * GL_X + 0.5 * (a + b)
            if form == "eta":
                inv = phi.H_inverse(x)
            else:
                # u = log tau; use the closed-form inverse while tau is representable
                inv = np.array([phi.inverse(math.exp(u)) if u < 700 else float(phi.H_inverse(u)) for u in x])
            pieces.append(0.5 * (b - a) * float(np.sum(GL_W / inv)))
    else:
        raise ValueError(f"unknown form {form!r}")
    return _partial_sums(np.array(pieces))


@dataclass
class PhiConditionReport:
    phi: str
    forms: dict
    verdict: str
    consistent: bool

    def as_dict(self):
        return {
            "phi": self.phi,
            "verdict": self.verdict,
            "consistent": self.consistent,
            "forms": {k: v.as_dict() for k, v in self.forms.items()},
        }


def phi_condition(phi: PhiFunction, windows: int = 40, validate: bool = True) -> PhiConditionReport:
    """Classify all six forms; ``consistent`` is false when they disagree."""
    if validate:
        phi.validate()
    forms = {f: classify_partial_sums(form_partial_sums(phi, f, windows)) for f in FORMS}
    kinds = {v.verdict for v in forms.values()}
    if kinds == {DIVERGES}:
        verdict, ok = DIVERGES, True
    elif kinds == {CONVERGES}:
        verdict, ok = CONVERGES, True
    else:
        verdict, ok = INCONCLUSIVE, False
    return PhiConditionReport(phi.name, forms, verdict, ok)
