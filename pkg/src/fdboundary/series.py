"""Empirical convergence verdicts for sequences of partial sums over dyadic windows."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DIVERGES = "diverges"
CONVERGES = "converges"
INCONCLUSIVE = "inconclusive"

CAUCHY_TOL = 1e-4
TAIL = 4
GEOMETRIC_RATIO = 0.75
DIVERGENCE_EXPONENT = -1.0


@dataclass
class SeriesVerdict:
    verdict: str
    partial_sums: list
    exponent: float | None = None
    reason: str = ""
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        out = {
            "verdict": self.verdict,
            "partial_sums": [float(x) for x in self.partial_sums],
            "reason": self.reason,
        }
        if self.exponent is not None:
            out["exponent"] = float(self.exponent)
        out.update(self.extra)
        return out


def increment_exponent(d: np.ndarray, m: np.ndarray) -> float:
    """Least-squares slope of ``log d_m`` against ``log m``."""
    return float(np.polyfit(np.log(m), np.log(d), 1)[0])


def classify_partial_sums(S, tail: int = TAIL, tol: float = CAUCHY_TOL) -> SeriesVerdict:
    """Decide whether a series with partial sums ``S_1..S_M`` converges.

    Increments ``d_m = S_m - S_{m-1}`` (with ``S_0 = 0``) drive the decision:

    * converges: the last ``tail`` increments are below ``tol * max(1, |S_M|)``,
      or they shrink geometrically (consecutive ratios at most 0.75);
    * diverges: a non-finite sum, or positive tail increments whose log-log
      slope against the window index is at least -1 (harmonic or slower decay);
    * inconclusive otherwise.
    """
    S = np.asarray(S, dtype=float)
    if S.size < tail + 1:
        raise ValueError(f"need at least {tail + 1} partial sums")
    if not np.all(np.isfinite(S)):
        return SeriesVerdict(DIVERGES, list(S), None, "non-finite partial sum")
    d = np.diff(np.concatenate([[0.0], S]))
    last = d[-tail:]
    m = np.arange(S.size - tail + 1, S.size + 1, dtype=float)
    scale = max(1.0, abs(S[-1]))
    if np.max(np.abs(last)) <= tol * scale:
        return SeriesVerdict(CONVERGES, list(S), None, "Cauchy within tolerance")
    beta = None
    if np.all(last > 0):
        beta = increment_exponent(last, m)
        ratios = last[1:] / last[:-1]
        if np.all(ratios <= GEOMETRIC_RATIO):
            return SeriesVerdict(CONVERGES, list(S), beta, "geometric decay of increments")
        if beta >= DIVERGENCE_EXPONENT:
            return SeriesVerdict(DIVERGES, list(S), beta, "increments decay no faster than 1/m")
    elif np.all(last < 0):
        ratios = last[1:] / last[:-1]
        if np.all(ratios <= GEOMETRIC_RATIO):
            return SeriesVerdict(CONVERGES, list(S), None, "geometric decay of increments")
    return SeriesVerdict(INCONCLUSIVE, list(S), beta, "no decisive tail behaviour")


def classify_sequence(values, tail: int = TAIL, tol: float = CAUCHY_TOL) -> SeriesVerdict:
    """Bounded/unbounded verdict for a sequence, read as partial sums of its increments."""
    return classify_partial_sums(values, tail, tol)
