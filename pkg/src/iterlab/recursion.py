"""The convex-combination recursion x_{n+1} = (1-mu_n) x_n + mu_n b_n and
numeric diagnostics built around it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .series import cauchy_heuristic
from .summability import StepSequence
from .trace import Trace


def _source(b, horizon: int) -> np.ndarray:
    if callable(b):
        vals = np.array([b(n) for n in range(horizon)], dtype=float)
    else:
        vals = np.asarray(b, dtype=float)
        if vals.shape[0] < horizon:
            raise ValueError("b shorter than horizon")
        vals = vals[:horizon]
    return vals


def recur_trace(b, steps: StepSequence, x0, horizon: int) -> Trace:
    """Run the recursion for n = 0..horizon-1 and return x_0..x_horizon.

    ``b`` is an array (scalar or (horizon, d)) or a callable n -> b_n. A
    non-finite b_n freezes the trace at x_n with the diverged flag set.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    bv = _source(b, horizon)
    mu = steps.prefix(horizon)
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    d = x.size if bv.ndim == 1 else bv.shape[1]
    if x.size == 1 and d > 1:
        x = np.full(d, x[0])
    out = np.empty((horizon + 1, d))
    out[0] = x
    last = horizon
    diverged = False
    for n in range(horizon):
        bn = bv[n]
        if not np.all(np.isfinite(bn)):
            last, diverged = n, True
            break
        x = (1.0 - mu[n]) * x + mu[n] * bn
        out[n + 1] = x
    return Trace(np.arange(last + 1), out[: last + 1], diverged=diverged)


def verify_basic_identity(trace: Trace, b, steps: StepSequence, N: int, M: int) -> float:
    """|x_{M+1} - x_N + sum_{n=N}^M mu_n x_n - sum_{n=N}^M mu_n b_n| (Euclidean)."""
    if not 0 <= N <= M < len(trace) - 1:
        raise IndexError("need N <= M < len(trace) - 1")
    x = trace.states
    bv = _source(b, M + 1)
    if bv.ndim == 1:
        bv = bv[:, None]
    mu = steps.prefix(M + 1)[N : M + 1, None]
    r = x[M + 1] - x[N] + (mu * x[N : M + 1]).sum(axis=0) - (mu * bv[N : M + 1]).sum(axis=0)
    return float(np.linalg.norm(r))


@dataclass(frozen=True)
class BoundCheckReport:
    first_violation: int | None
    max_ratio: float
    lim_inf_estimate: float
    lim_sup_eps_estimate: float
    window: int


def max_bound_check(d, eps, lam, start: int = 0, window: int | None = None,
                    rtol: float = 1e-12) -> BoundCheckReport:
    """Check d_{n+1} <= lam_n * max(d_n, eps_n) for n >= start.

    ``first_violation`` is the index n+1 of the first offending d. The two
    tail estimates are min of d_k q_k and max of eps_k q_k over a trailing
    window, with q_k = sup_{n>=k} prod_{i=k}^n lam_i taken over the horizon.
    """
    d = np.asarray(d, dtype=float)
    eps = np.asarray(eps, dtype=float)
    lam = np.asarray(lam, dtype=float)
    n = min(d.size - 1, eps.size, lam.size)
    if n < 1:
        raise ValueError("sequences too short")
    sl = slice(start, None)
    if np.any(d[sl] < 0) or np.any(eps[start:n] < 0) or np.any(lam[start:n] < 0):
        raise ValueError("invalid: negative input")
    bound = lam[:n] * np.maximum(d[:n], eps[:n])
    nxt = d[1 : n + 1]
    idx = np.arange(n)
    bad = (idx >= start) & (nxt > bound * (1 + rtol) + 1e-300)
    first = int(idx[bad][0] + 1) if bad.any() else None
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, nxt / bound, np.where(nxt > 0, np.inf, 0.0))
    max_ratio = float(ratio[start:].max()) if n > start else 0.0

    with np.errstate(divide="ignore"):
        ll = np.log(lam[:n])
    L = np.concatenate(([0.0], np.cumsum(ll)))  # L[k] = sum_{i<k} log lam_i
    # sup_{m>=k} (L[m+1] - L[k]); reverse running max of L[1:]
    rmax = np.maximum.accumulate(L[1:][::-1])[::-1]
    with np.errstate(over="ignore", invalid="ignore"):
        q = np.exp(rmax - L[:-1])
    w = window or max(1, n // 10)
    tail = slice(max(start, n - w), n)
    with np.errstate(invalid="ignore"):
        dq = d[:n] * q
        eq = eps[:n] * q
    lim_inf = float(np.nan_to_num(dq[tail], nan=0.0).min())
    lim_sup = float(np.nan_to_num(eq[tail], nan=0.0).max())
    return BoundCheckReport(first, max_ratio, lim_inf, lim_sup, w)


def robbins_monro_bound_sequences(x, xi, mu, theta, delta, kappa1, kappa2):
    """Quantities of the scalar Robbins-Monro convergence argument.

    With S_n = sum_{i>=n} mu_i xi_{i+1} (truncated at the horizon),
    d_n = |x_n - theta - S_n| and eta_n = |S_n|, the squared distance obeys
    d_{n+1}^2 <= lam_n max(d_n^2, eps_n^2) where lam_n = 1 - mu_n delta +
    3 mu_n^2 kappa1^2 and eps_n is the positive root of
    delta t^2 - g_n t - h_n. Returns (d^2, eps^2, lam), index-aligned.

    ``x`` is x_0..x_H, ``xi[n]`` the noise xi_{n+1} entering step n, ``mu``
    the steps mu_0..mu_{H-1}.
    """
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    mu = np.asarray(mu, float)
    H = mu.size
    terms = mu * xi[:H]
    S = np.concatenate((np.cumsum(terms[::-1])[::-1], [0.0]))  # S_0..S_H
    d = np.abs(x[: H + 1] - theta - S)
    eta = np.abs(S[:H])
    g = 2 * eta * (2 * delta + kappa1)
    h = 2 * eta * (kappa2 + kappa1 * eta - delta * eta) + 3 * mu * (kappa1**2 * eta**2 + kappa2**2)
    h = np.maximum(h, 0.0)
    eps = (g + np.sqrt(g * g + 4 * delta * h)) / (2 * delta)
    lam = 1 - mu * delta + 3 * mu**2 * kappa1**2
    return d**2, eps**2, lam


@dataclass(frozen=True)
class KroneckerReport:
    series: np.ndarray  # partial sums of x_n / a_n
    m: np.ndarray  # sum_{i<=n} x_i / a_n
    transformed: np.ndarray  # partial sums of (1/a_n - 1/a_{n+1}) sum_{i<=n} x_i
    series_cauchy: bool
    m_small: bool
    consistent: bool
    heuristic: bool = True


def kronecker_check(x, a, window: int | None = None, tau: float = 1e-3,
                    small: float = 1e-2) -> KroneckerReport:
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if x.shape != a.shape:
        raise ValueError("x and a must align")
    if np.any(a <= 0) or np.any(np.diff(a) <= 0):
        raise ValueError("a must be positive and strictly increasing")
    series = np.cumsum(x / a)
    cs = np.cumsum(x)
    m = cs / a
    transformed = np.cumsum((1 / a[:-1] - 1 / a[1:]) * cs[:-1])
    w = window or max(1, x.size // 10)
    conv = cauchy_heuristic(series, w, tau)
    m_small = abs(m[-1]) < small
    return KroneckerReport(series, m, transformed, conv, m_small, (not conv) or m_small)


def podstawowy_check(b, steps: StepSequence, horizon: int, tau: float = 1e-3,
                     window: int | None = None) -> dict:
    """Empirical direction check: if sum mu_n b_n looks Cauchy then x_n is
    small and sum mu_n x_n looks Cauchy too (x_0 = 0)."""
    tr = recur_trace(b, steps, 0.0, horizon)
    bv = _source(b, horizon)
    mu = steps.prefix(horizon)
    w = window or max(1, horizon // 10)
    sb = np.cumsum(mu * bv)
    sx = np.cumsum(mu * tr.values[:horizon])
    return {
        "b_series_cauchy": cauchy_heuristic(sb, w, tau),
        "x_series_cauchy": cauchy_heuristic(sx, w, 10 * tau),
        "x_final": float(tr.values[-1]),
        "b_oscillation": float(np.ptp(sb[-w:])),
        "x_oscillation": float(np.ptp(sx[-w:])),
    }
