"""Cesàro and Riesz summation, and the weight/step conjugacy.

A weight sequence {alpha_i} and a step sequence {mu_i} are conjugate when
mu_i = alpha_i / sum_{k<=i} alpha_k. The Riesz mean of x under alpha is then
produced by the convex-combination recursion driven by mu.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .trace import Trace

RTOL = 1e-9
ATOL = 1e-12


@dataclass(frozen=True)
class WeightSequence:
    """Index -> alpha_i generator with alpha_0 = 1 and alpha_i >= 0.

    ``log_fn`` is optional and lets exponential families be used far past the
    point where alpha_i itself overflows.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    log_fn: Callable[[np.ndarray], np.ndarray] | None = None
    length: int | None = None  # finite prefix only

    def prefix(self, n: int) -> np.ndarray:
        if self.length is not None and n > self.length:
            raise IndexError(f"weight prefix has only {self.length} terms")
        a = np.asarray(self.fn(np.arange(n)), dtype=float)
        a = np.broadcast_to(a, (n,)).astype(float)
        _check_weights(a)
        return a

    def log_prefix(self, n: int) -> np.ndarray:
        if self.log_fn is not None:
            return np.asarray(self.log_fn(np.arange(n)), dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(self.prefix(n))

    def __getitem__(self, i: int) -> float:
        return float(self.prefix(i + 1)[i])

    @staticmethod
    def const() -> "WeightSequence":
        return WeightSequence(lambda i: np.ones_like(i, dtype=float), "const")

    @staticmethod
    def linear() -> "WeightSequence":
        return WeightSequence(lambda i: i + 1.0, "linear")

    @staticmethod
    def square() -> "WeightSequence":
        return WeightSequence(lambda i: (i + 1.0) ** 2, "square")

    @staticmethod
    def power(p: float) -> "WeightSequence":
        return WeightSequence(lambda i: (i + 1.0) ** p, f"power:{p}")

    @staticmethod
    def exp(a: float) -> "WeightSequence":
        return WeightSequence(lambda i: np.exp(a * i), f"exp:{a}", log_fn=lambda i: a * i)

    @staticmethod
    def geometric(q: float) -> "WeightSequence":
        """(1, q/(1-q), q/(1-q)^2, ...), conjugate to the constant step q."""
        if not 0 < q < 1:
            raise ValueError("q must lie in (0,1)")
        r = 1.0 / (1.0 - q)
        lq, lr = np.log(q), np.log(r)

        def logf(i):
            i = np.asarray(i, dtype=float)
            return np.where(i == 0, 0.0, lq + i * lr)

        return WeightSequence(lambda i: np.exp(logf(i)), f"geom:{q}", log_fn=logf)

    @staticmethod
    def from_values(values) -> "WeightSequence":
        v = np.asarray(values, dtype=float).copy()
        _check_weights(v)
        v.setflags(write=False)
        return WeightSequence(lambda i: v[np.asarray(i)], "values", length=len(v))

    @staticmethod
    def parse(family: str) -> "WeightSequence":
        """Parse 'const', 'linear', 'square', 'exp:a' or 'geom:q'."""
        head, _, arg = family.partition(":")
        if head == "const":
            return WeightSequence.const()
        if head == "linear":
            return WeightSequence.linear()
        if head == "square":
            return WeightSequence.square()
        if head == "exp":
            return WeightSequence.exp(float(arg))
        if head == "geom":
            return WeightSequence.geometric(float(arg))
        if head == "power":
            return WeightSequence.power(float(arg))
        raise ValueError(f"unknown weight family {family!r}")


def _check_weights(a: np.ndarray):
    if a.size and a[0] != 1.0:
        raise ValueError("alpha_0 must equal 1")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise ValueError("weights must be finite and nonnegative")


@dataclass(frozen=True)
class StepSequence:
    """Index -> mu_i generator.

    Normal step sequences have mu_0 = 1 and mu_i in (0,1); ``check`` enforces
    that. Gain sequences used by stochastic approximation (e.g. a/(n+1)) are
    represented by the same type without the check.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "custom"
    length: int | None = None

    def prefix(self, n: int) -> np.ndarray:
        if self.length is not None and n > self.length:
            raise IndexError(f"step prefix has only {self.length} terms")
        return np.broadcast_to(np.asarray(self.fn(np.arange(n)), dtype=float), (n,)).astype(float)

    def __getitem__(self, i: int) -> float:
        return float(self.prefix(i + 1)[i])

    def check(self, horizon: int) -> np.ndarray:
        mu = self.prefix(horizon)
        if mu[0] != 1.0:
            raise ValueError("mu_0 must equal 1")
        if np.any((mu[1:] <= 0) | (mu[1:] >= 1)):
            raise ValueError("mu_i must lie in (0,1) for i >= 1")
        return mu

    @staticmethod
    def harmonic(a: float = 1.0) -> "StepSequence":
        return StepSequence(lambda i: a / (i + 1.0), "harmonic" if a == 1 else f"harmonic:{a}")

    @staticmethod
    def power(beta: float, a: float = 1.0) -> "StepSequence":
        return StepSequence(lambda i: a * (i + 1.0) ** (-beta), f"power:{beta}")

    @staticmethod
    def constant(q: float) -> "StepSequence":
        return StepSequence(lambda i: np.where(np.asarray(i) == 0, 1.0, q), f"const:{q}")

    @staticmethod
    def from_values(values) -> "StepSequence":
        v = np.asarray(values, dtype=float).copy()
        v.setflags(write=False)
        return StepSequence(lambda i: v[np.asarray(i)], "values", length=len(v))


@dataclass(frozen=True)
class RegularityReport:
    horizon: int
    row_sum_deviation: float
    max_column_tail: float
    column_trend: float
    verdict: str
    heuristic: bool = field(default=True)


def cesaro_coefficients(n: int, alpha: float) -> np.ndarray:
    """A_0^alpha .. A_n^alpha by the product recurrence, no pole check."""
    k = np.arange(1, n + 1, dtype=float)
    return np.concatenate(([1.0], np.cumprod((k + alpha) / k)))


def _is_pole(alpha: float) -> bool:
    return alpha < 0 and float(alpha).is_integer()


def cesaro_coefficient(n: int, alpha: float) -> float:
    if n < 0:
        raise ValueError("n must be a natural number")
    if _is_pole(alpha):
        raise ValueError("alpha is a negative-integer pole")
    a = 1.0
    for k in range(1, n + 1):
        a *= (k + alpha) / k
    return a


def cesaro_mean(seq, alpha: float, n: int) -> float:
    q = np.asarray(seq, dtype=float)
    if not 0 <= n < q.size:
        raise IndexError("n out of range")
    if alpha <= -1:
        raise ValueError("alpha must exceed -1")
    lower = cesaro_coefficients(n, alpha - 1.0)
    # A_{n-k}^{alpha-1} q_k summed over k
    num = float(np.dot(lower[::-1], q[: n + 1]))
    return num / cesaro_coefficient(n, alpha)


def _riesz_recursion(x: np.ndarray, mu: np.ndarray) -> np.ndarray:
    out = []
    xb = 0.0
    for m, v in zip(mu.tolist(), x.tolist()):
        xb = (1.0 - m) * xb + m * v
        out.append(xb)
    return np.array(out)


def riesz_mean_trace(seq, weights: WeightSequence) -> Trace:
    """Riesz means xbar_1..xbar_len of seq = (x_1, x_2, ...) via the recursion."""
    x = np.asarray(seq, dtype=float)
    if x.size == 0:
        raise ValueError("empty input")
    mu = conjugate_steps(weights, x.size).prefix(x.size)
    return Trace(np.arange(1, x.size + 1), _riesz_recursion(x, mu))


def riesz_mean_quotient(seq, weights: WeightSequence) -> np.ndarray:
    """Explicit weighted quotient, rescaled so large exponential weights stay finite."""
    x = np.asarray(seq, dtype=float)
    la = weights.log_prefix(x.size)
    a = np.exp(la - la.max())
    return np.cumsum(a * x) / np.cumsum(a)


def conjugate_steps(weights: WeightSequence, horizon: int) -> StepSequence:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    la = weights.log_prefix(horizon)
    # log of cumulative sums, stable for exponential growth
    lcum = np.logaddexp.accumulate(la)
    if not np.all(np.isfinite(lcum)):
        raise ValueError("zero cumulative weight sum")
    with np.errstate(under="ignore"):
        mu = np.exp(la - lcum)
    mu[0] = 1.0
    return StepSequence.from_values(mu)


def conjugate_weights(steps: StepSequence, horizon: int) -> WeightSequence:
    mu = steps.prefix(horizon)
    tail = mu[1:]
    if np.any((tail <= 0) | (tail >= 1)):
        raise ValueError("degenerate step: mu_i must lie in (0,1) for i >= 1")
    logs = np.concatenate(([0.0], np.log(tail) - np.cumsum(np.log1p(-tail))))
    return WeightSequence.from_values(np.exp(logs))


def check_toeplitz_regularity(
    rows: Callable[[int], np.ndarray],
    horizon: int,
    columns: int = 3,
    row_tol: float = 1e-6,
    column_tol: float = 0.05,
) -> RegularityReport:
    """Finite-horizon check of the two regularity conditions.

    ``rows(n)`` returns t_{n,0}, t_{n,1}, ... . Rows must sum to 1 within
    ``row_tol`` at the horizon. Each of the first ``columns`` columns must be
    small at the horizon, or at least still falling (tail below 90% of its
    value at horizon/2).
    """
    last = np.asarray(rows(horizon), dtype=float)
    mid = np.asarray(rows(max(horizon // 2, columns)), dtype=float)
    if np.any(last < 0) or np.any(mid < 0):
        raise ValueError("invalid matrix: negative entry")
    dev = abs(float(last.sum()) - 1.0)
    k = min(columns + 1, last.size)
    tail = float(last[:k].max()) if k else 0.0
    ref = float(mid[: min(k, mid.size)].max()) if mid.size else 0.0
    trend = tail / ref if ref > 0 else 0.0
    stuck = tail > column_tol and trend >= 0.9
    verdict = "violated" if (dev > row_tol or stuck) else "plausible"
    return RegularityReport(horizon, dev, tail, trend, verdict)


def cesaro_rows(n: int) -> np.ndarray:
    return np.full(n + 1, 1.0 / (n + 1))


def riesz_rows(weights: WeightSequence) -> Callable[[int], np.ndarray]:
    def rows(n):
        la = weights.log_prefix(n + 1)
        a = np.exp(la - la.max())
        return a / a.sum()

    return rows


@dataclass(frozen=True)
class RieszIdentityReport:
    s: np.ndarray
    s_bar: np.ndarray
    s_hat: np.ndarray
    x_bar: np.ndarray
    max_mean_deviation: float  # |s_hat_i - s_bar_i|
    max_sum_deviation: float  # |s_{n+1} - s_hat_n - xbar_{n+1}|

    @property
    def max_deviation(self) -> float:
        return max(self.max_mean_deviation, self.max_sum_deviation)


def _weighted_running_mean(v: np.ndarray, la: np.ndarray) -> np.ndarray:
    """sum_{j<=i} a_j v_j / sum_{j<=i} a_j from log weights, rescaled by the running max."""
    out = np.empty(v.size)
    num = den = 0.0
    m = -np.inf
    for i, (lv, x) in enumerate(zip(la.tolist(), v.tolist())):
        if lv > m:
            r = math.exp(m - lv) if np.isfinite(m) else 0.0
            num, den, m = num * r, den * r, lv
        w = math.exp(lv - m)
        num += w * x
        den += w
        out[i] = num / den
    return out


def riesz_identity_check(x, weights: WeightSequence) -> RieszIdentityReport:
    """Evaluate the partial-sum identities for Riesz means.

    With x = (x_1..x_N), mu conjugate to alpha and xbar_0 = 0:
    s_i = sum_{j<i} mu_j x_{j+1}, sbar_i the alpha-mean of s_0..s_i,
    shat_i = sum_{j<=i} mu_j xbar_j. Then shat_i = sbar_i and
    s_{n+1} = shat_n + xbar_{n+1}.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two terms")
    mu = conjugate_steps(weights, n + 1).prefix(n + 1)
    xbar = np.concatenate(([0.0], _riesz_recursion(x, mu[:n])))  # xbar_0..xbar_N
    s = np.concatenate(([0.0], np.cumsum(mu[:n] * x)))  # s_0..s_N
    s_bar = _weighted_running_mean(s, weights.log_prefix(n + 1))
    s_hat = np.cumsum(mu * xbar)
    scale = 1.0 + np.abs(s)
    d1 = float(np.max(np.abs(s_hat - s_bar) / scale))
    d2 = float(np.max(np.abs(s[1:] - s_hat[:-1] - xbar[1:]) / scale[1:]))
    return RieszIdentityReport(s, s_bar, s_hat, xbar, d1, d2)


def sequence_csv(seq, horizon: int, path=None) -> str:
    from .trace import table_to_csv

    vals = seq.prefix(horizon)
    return table_to_csv(["index", "value"], zip(range(horizon), vals), path)
