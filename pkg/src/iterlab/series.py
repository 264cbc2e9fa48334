"""Finite-horizon heuristics for whether a series converges.

None of these can prove anything; every verdict ships with the numbers it
was computed from.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CONVERGE_SLOPE = -1.05
DIVERGE_SLOPE = -1.02


def cauchy_heuristic(partial, window: int, tau: float) -> bool:
    """True when partial sums oscillate by less than tau over the trailing window."""
    p = np.asarray(partial, dtype=float)
    if p.size == 0:
        return True
    w = max(1, min(window, p.size))
    return bool(np.ptp(p[-w:]) < tau)


@dataclass(frozen=True)
class ConditionResult:
    value: float  # partial sum at the horizon
    trend: float  # log-log slope of |terms| over the trailing window
    verdict: str  # converging | diverging | inconclusive
    window: int


@dataclass(frozen=True)
class ConditionReport:
    horizon: int
    conditions: dict = field(default_factory=dict)
    heuristic: bool = True
    extra: dict = field(default_factory=dict)

    def verdict(self, name: str) -> str:
        return self.conditions[name].verdict

    def summary(self) -> dict:
        return {
            k: {"value": c.value, "trend": c.trend, "verdict": c.verdict, "window": c.window}
            for k, c in self.conditions.items()
        }


def assess_terms(terms, index=None, window_frac: float = 0.1,
                 converge_slope: float = CONVERGE_SLOPE,
                 diverge_slope: float = DIVERGE_SLOPE) -> ConditionResult:
    """Verdict for sum(terms) from the decay rate of the tail.

    Terms that decay like index^s with s < -1 give a convergent series,
    s >= -1 a divergent one. The slope is fitted on |terms| against the
    index in log-log coordinates over the trailing window.
    """
    t = np.abs(np.asarray(terms, dtype=float))
    n = t.size
    idx = np.arange(1, n + 1, dtype=float) if index is None else np.asarray(index, float)
    total = float(np.sum(terms)) if n else 0.0
    if n == 0:
        return ConditionResult(0.0, float("nan"), "converging", 0)
    w = max(3, int(round(n * window_frac)))
    w = min(w, n)
    tt, ii = t[-w:], idx[-w:]
    if not np.all(np.isfinite(tt)):
        return ConditionResult(total, float("nan"), "diverging", w)
    pos = tt > 0
    if not pos.any():
        return ConditionResult(total, float("-inf"), "converging", w)
    if pos.sum() < 2:
        return ConditionResult(total, float("nan"), "inconclusive", w)
    slope = float(np.polyfit(np.log(ii[pos]), np.log(tt[pos]), 1)[0])
    if slope < converge_slope:
        v = "converging"
    elif slope > diverge_slope:
        v = "diverging"
    else:
        v = "inconclusive"
    return ConditionResult(total, slope, v, w)


def report(horizon: int, named_terms: dict, **kw) -> ConditionReport:
    return ConditionReport(horizon, {k: assess_terms(v, **kw) for k, v in named_terms.items()})
