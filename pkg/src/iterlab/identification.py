"""Parametric identification by stochastic-approximation procedures and
nonparametric identification through recursive regression."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .kernels import Kernel
from .regression import evaluate_ratio, recursive_regression
from .summability import StepSequence
from .trace import GridFunction, Trace

COND_LIMIT = 1e10


@dataclass(frozen=True)
class EstimatingFunctionSpec:
    """Residual F(window, p) and optional normalizing weight W(window, p)."""

    residual: Callable[[np.ndarray, np.ndarray], np.ndarray]
    window_length: int
    weight: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None


@dataclass(frozen=True)
class IdentRun:
    trace: Trace
    truth: np.ndarray | None = None
    flags: tuple = ()

    @property
    def final(self) -> np.ndarray:
        return self.trace.final

    @property
    def final_error(self) -> float | None:
        if self.truth is None:
            return None
        return float(np.linalg.norm(self.trace.final - self.truth))


def _lags(y: np.ndarray, q: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Rows v_i = (y_{i+q-1}, ..., y_i) and targets y_{i+q}, i = 0..horizon-1."""
    if y.size < q + horizon:
        raise ValueError("series too short for the requested horizon")
    V = np.stack([y[q - 1 - j: q - 1 - j + horizon] for j in range(q)], axis=1)
    return V, y[q: q + horizon]


def _truth(truth):
    return None if truth is None else np.asarray(truth, float)


def identify_lms(series, order: int, steps: StepSequence, b0=None, horizon: int | None = None,
                 truth=None) -> IdentRun:
    """b_{i+1} = b_i + mu_i v_i (y_{i+q} - b_i . v_i)."""
    y = np.asarray(series, float)
    H = horizon or y.size - order
    V, target = _lags(y, order, H)
    mu = steps.prefix(H).tolist()
    b = np.zeros(order) if b0 is None else np.asarray(b0, float).copy()
    if b.size != order:
        raise ValueError("order mismatch")
    out = np.empty((H + 1, order))
    out[0] = b
    for i in range(H):
        v = V[i]
        b = b + mu[i] * v * (target[i] - b @ v)
        out[i + 1] = b
    return IdentRun(Trace(np.arange(H + 1), out, meta={"method": "lms"}), _truth(truth))


def identify_normalized(series, order: int, gain: StepSequence | None = None, a0=None,
                        horizon: int | None = None, truth=None,
                        fallback: StepSequence | None = None, warmup: int | None = None) -> IdentRun:
    """a_{i+1} = a_i + g_i M_i^{-1} v_i (y_{i+q} - a_i . v_i), M_i = (1/(i+1)) sum_{k<=i} v_k v_k^T.

    Default gain g_i = 2/(i+1). While cond(M_i) > 1e10 the plain LMS step with
    ``fallback`` (default 1/(i+1)) is used instead. Singularity persisting past
    ``warmup`` steps (default 10 q) flags the run.
    """
    y = np.asarray(series, float)
    q = order
    H = horizon or y.size - q
    V, target = _lags(y, q, H)
    g = (gain or StepSequence(lambda i: 2.0 / (i + 1.0), "2/(i+1)")).prefix(H)
    fb = (fallback or StepSequence.harmonic()).prefix(H)
    warm = 10 * q if warmup is None else warmup
    a = np.zeros(q) if a0 is None else np.asarray(a0, float).copy()
    out = np.empty((H + 1, q))
    out[0] = a
    S = np.zeros((q, q))
    fallbacks = 0
    late_singular = False
    for i in range(H):
        v = V[i]
        S += np.outer(v, v)
        M = S / (i + 1)
        r = target[i] - a @ v
        # symmetric eigendecomposition doubles as the rank-revealing solve
        w, U = np.linalg.eigh(M)
        if w[0] < -1e-9 * max(w[-1], 1.0):
            raise AssertionError("second-moment matrix lost positive semidefiniteness")
        if w[0] > 0 and w[-1] / w[0] <= COND_LIMIT:
            a = a + g[i] * (U @ ((U.T @ v) / w)) * r
        else:
            fallbacks += 1
            late_singular |= i >= warm
            a = a + fb[i] * v * r
        out[i + 1] = a
    flags = ("singular_after_warmup",) if late_singular else ()
    tr = Trace(np.arange(H + 1), out, meta={"method": "normalized", "fallback_steps": fallbacks})
    return IdentRun(tr, _truth(truth), flags)


def ar1_ratio_estimate(series) -> IdentRun:
    """a_n = sum_{i<n} X_i X_{i+1} / sum_{i<n} X_i^2 as a running trace."""
    x = np.asarray(series, float)
    num = np.cumsum(x[:-1] * x[1:])
    den = np.cumsum(x[:-1] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return IdentRun(Trace(np.arange(1, x.size), a, meta={"method": "ratio"}))


# scalar nonlinear example -----------------------------------------------------

def kink_map(x, p):
    """f(x; p) = p x for x < p, p^2/2 + p x / 2 for x >= p."""
    x = np.asarray(x, float)
    return np.where(x < p, p * x, 0.5 * p * p + 0.5 * p * x)


def chi(x, p, q):
    """Difference quotient (f(x;p) - f(x;q)) / (p - q), piecewise in x.

    Middle region: x/2 + (p+q)/2 + max (x - max) / (2 (max - min)). At p = q
    the parameter derivative is returned.
    """
    x = np.asarray(x, float)
    lo, hi = min(p, q), max(p, q)
    if hi == lo:
        return np.where(x < p, x, x / 2 + p)
    mid = x / 2 + (p + q) / 2 + hi * (x - hi) / (2 * (hi - lo))
    return np.where(x < lo, x, np.where(x < hi, mid, x / 2 + (p + q) / 2))


def eta(x, p, q):
    """Lower bound of chi: x, (x + min)/2, x/2 + (p + q)/2 on the three regions."""
    x = np.asarray(x, float)
    lo, hi = min(p, q), max(p, q)
    return np.where(x < lo, x, np.where(x < hi, (x + lo) / 2, x / 2 + (p + q) / 2))


def simulate_kink_system(p: float, noise: np.ndarray, y0: float = 0.0) -> np.ndarray:
    """y_{i+1} = f(y_i; p) + noise_i, returns y_0..y_n."""
    z = np.asarray(noise, float).tolist()
    out = [float(y0)]
    y = float(y0)
    for e in z:
        y = (p * y if y < p else 0.5 * p * p + 0.5 * p * y) + e
        out.append(y)
    return np.array(out)


def identify_scalar_nonlinear(series, steps: StepSequence, q0: float,
                              horizon: int | None = None, truth: float | None = None) -> IdentRun:
    """q_{i+1} = q_i - mu_i (y_{i+1} - f(y_i; q_i)).

    With ``truth`` given, aux column ``eta_mean`` is the running mean of
    eta(y_i, p, q_i).
    """
    y = np.asarray(series, float)
    H = horizon or y.size - 1
    mu = steps.prefix(H).tolist()
    yl = y.tolist()
    q = float(q0)
    out = [q]
    etas = [0.0]
    acc = 0.0
    for i in range(H):
        yi = yl[i]
        if truth is not None:
            acc += float(eta(yi, truth, q))
            etas.append(acc / (i + 1))
        fq = q * yi if yi < q else 0.5 * q * q + 0.5 * q * yi
        q = q - mu[i] * (yl[i + 1] - fq)
        out.append(q)
    aux = {"eta_mean": np.array(etas)} if truth is not None else {}
    ok = np.isfinite(out)
    diverged = not ok.all()
    if diverged:
        stop = int(np.argmin(ok))
        out = out[:stop]
        aux = {k: v[:stop] for k, v in aux.items()}
    tr = Trace(np.arange(len(out)), np.array(out), aux, diverged=diverged)
    return IdentRun(tr, None if truth is None else np.array([truth]))


def identify_nonparametric(series, kernel: Kernel, bandwidth, grid,
                           horizon: int | None = None) -> GridFunction:
    """Recursive regression of x_{i+1} on x_i.

    ``series`` may also be a list of separate trajectories; pairs are then
    formed within each one, in order, and ``horizon`` caps the total count.
    """
    if isinstance(series, (list, tuple)) and series and np.ndim(series[0]) == 1:
        parts = [np.asarray(s, float) for s in series]
    else:
        parts = [np.asarray(series, float)]
    xs = np.concatenate([p[:-1] for p in parts])
    ys = np.concatenate([p[1:] for p in parts])
    if xs.size < 1:
        raise ValueError("need at least two observations")
    H = min(horizon or xs.size, xs.size)
    state = recursive_regression(xs[:H], ys[:H], kernel, bandwidth, grid)
    return evaluate_ratio(state)


def four_segment_map(x):
    """0.8x below -2; -0.4 - 0.8(x + 2) on [-2, 0); 1 on [0, 0.5]; 1 - 0.9x above 0.5."""
    x = np.asarray(x, float)
    return np.where(x < -2, 0.8 * x,
                    np.where(x < 0, -0.4 - 0.8 * (x + 2),
                             np.where(x <= 0.5, 1.0, 1 - 0.9 * x)))


def ma_noise(zeta, coeffs=(0.3, -0.2)) -> np.ndarray:
    """xi_n = zeta_n + c_1 zeta_{n-1} + c_2 zeta_{n-2} (zero before the start)."""
    z = np.asarray(zeta, float)
    out = z.copy()
    for j, c in enumerate(coeffs, start=1):
        out[j:] += c * z[:-j]
    return out
