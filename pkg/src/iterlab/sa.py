"""Robbins-Monro and Kiefer-Wolfowitz procedures, projections, quantile
tracking and step-plan checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .processes import Distribution, Normal, SampleStream, make_rng, mix_seed
from .series import ConditionReport, assess_terms
from .summability import StepSequence
from .trace import Trace

DIVERGENCE_CUTOFF = 1e12


@dataclass(frozen=True)
class SAProblem:
    """Drift F_n(x) and noise for x_{n+1} = x_n - mu_n (F_n(x_n) + xi_{n+1}).

    ``drift(n, x)`` returns an array of length ``dimension``. ``noise`` is a
    Distribution (iid additive, one draw per coordinate per step), a callable
    oracle ``(n, x, rng) -> array`` for state-dependent noise, or None.
    """

    dimension: int
    drift: Callable[[int, np.ndarray], np.ndarray]
    noise: object = None
    theta: np.ndarray | None = None
    kappa1: float | None = None
    kappa2: float | None = None
    delta: float | None = None

    def __post_init__(self):
        for k in ("kappa1", "kappa2", "delta"):
            v = getattr(self, k)
            if v is not None and v < 0:
                raise ValueError(f"{k} must be nonnegative")
        if self.theta is not None:
            object.__setattr__(self, "theta", np.atleast_1d(np.asarray(self.theta, float)))


def stationary(f: Callable[[np.ndarray], np.ndarray]):
    """Wrap a time-invariant f(x) as a drift family."""
    return lambda n, x: f(x)


@dataclass(frozen=True)
class StepPlan:
    mu: StepSequence
    c: StepSequence | None = None

    def spacing(self, n: int) -> np.ndarray:
        if self.c is None:
            raise ValueError("plan has no spacing sequence")
        c = self.c.prefix(n)
        if np.any(c <= 0):
            raise ValueError("spacing c_n must be positive")
        return c


class _Noise:
    """Pre-drawn additive noise or a state-dependent oracle."""

    def __init__(self, noise, dim, horizon, seed):
        self.rng = make_rng(seed)
        self.oracle = None
        self.table = None
        if noise is None:
            self.table = np.zeros((horizon, dim))
        elif isinstance(noise, Distribution):
            self.table = noise.draw(self.rng, horizon * dim).reshape(horizon, dim)
        elif callable(noise):
            self.oracle = noise
        else:
            raise TypeError("noise must be a Distribution, a callable or None")

    def __call__(self, n, x):
        if self.table is not None:
            return self.table[n]
        return np.atleast_1d(np.asarray(self.oracle(n, x, self.rng), float))


def _run(problem: SAProblem, plan: StepPlan, x0, horizon, seed, project=None) -> Trace:
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if x.size != problem.dimension:
        raise ValueError("x0 dimension mismatch")
    mu = plan.mu.prefix(horizon)
    noise = _Noise(problem.noise, problem.dimension, horizon, seed)
    out = np.empty((horizon + 1, problem.dimension))
    out[0] = x
    last, diverged = horizon, False
    for n in range(horizon):
        g = np.asarray(problem.drift(n, x), dtype=float) + noise(n, x)
        y = x - mu[n] * g
        if project is not None:
            y = project(y)
        if not np.all(np.isfinite(y)) or np.linalg.norm(y) > DIVERGENCE_CUTOFF:
            last, diverged = n, True
            break
        x = y
        out[n + 1] = x
    states = out[: last + 1]
    aux = {}
    if problem.theta is not None:
        aux["err"] = np.linalg.norm(states - problem.theta, axis=1)
    meta = {}
    if noise.table is not None:
        meta["noise"] = noise.table[:last]
    return Trace(np.arange(last + 1), states, aux, diverged=diverged, meta=meta)


def robbins_monro(problem: SAProblem, plan: StepPlan, x0, horizon: int, seed: int = 0) -> Trace:
    """x_{n+1} = x_n - mu_n (F_n(x_n) + xi_{n+1}), n = 0..horizon-1.

    The trace holds x_0..x_horizon and, when theta is known, ``err`` =
    ||x_n - theta||. For additive noise the draws are kept in
    ``trace.meta['noise']`` (row n is xi_{n+1}).
    """
    return _run(problem, plan, x0, horizon, seed)


# projections ---------------------------------------------------------------


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, float)))

    def contains(self, x) -> bool:
        return bool(np.linalg.norm(np.asarray(x) - self.center) <= self.radius * (1 + 1e-12))

    def project(self, x):
        d = np.asarray(x, float) - self.center
        r = np.linalg.norm(d)
        return np.asarray(x, float) if r <= self.radius else self.center + d * (self.radius / r)


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, float))
        hi = np.atleast_1d(np.asarray(self.hi, float))
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("need lo <= hi elementwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def contains(self, x) -> bool:
        x = np.asarray(x)
        return bool(np.all((x >= self.lo) & (x <= self.hi)))

    def project(self, x):
        return np.clip(np.asarray(x, float), self.lo, self.hi)


class Custom:
    """User projector, validated by randomized idempotence and
    non-expansiveness probes at construction."""

    def __init__(self, projector: Callable, dimension: int, probes: int = 100,
                 scale: float = 10.0, seed: int = 0, tol: float = 1e-12):
        rng = make_rng(seed)
        for _ in range(probes):
            x = rng.normal(0, scale, dimension)
            y = rng.normal(0, scale, dimension)
            px, py = np.asarray(projector(x), float), np.asarray(projector(y), float)
            if np.linalg.norm(projector(px) - px) > tol * (1 + np.linalg.norm(px)):
                raise ValueError("projector is not idempotent")
            if np.linalg.norm(px - py) > np.linalg.norm(x - y) * (1 + tol) + tol:
                raise ValueError("projector is expansive")
        self.projector = projector
        self.dimension = dimension

    def contains(self, x) -> bool:
        x = np.asarray(x, float)
        return bool(np.linalg.norm(self.projector(x) - x) <= 1e-12 * (1 + np.linalg.norm(x)))

    def project(self, x):
        return np.asarray(self.projector(np.asarray(x, float)), float)


def projected_run(problem: SAProblem, plan: StepPlan, region, x0, horizon: int,
                  seed: int = 0) -> Trace:
    """Robbins-Monro step followed by projection onto ``region`` when outside."""
    if not region.contains(x0):
        raise ValueError("x0 must lie in the projection set")

    def proj(y):
        return y if region.contains(y) else region.project(y)

    return _run(problem, plan, x0, horizon, seed, proj)


# Kiefer-Wolfowitz ------------------------------------------------------------


def kiefer_wolfowitz(psi: Callable[[float], float], plan: StepPlan, x0: float, horizon: int,
                     seed: int = 0, noise: Distribution | None = None) -> Trace:
    """x_{n+1} = x_n - mu_n (Psi_{2n+1}(x_n + c_n) - Psi_{2n}(x_n - c_n)) / (2 c_n).

    Steps run over n = 1..horizon and the trace holds x_1..x_{horizon+1}.
    Psi_k(x) = psi(x) + xi_k with xi_k iid from ``noise``; xi_{2n} and
    xi_{2n+1} are separate draws.
    """
    mu = plan.mu.prefix(horizon + 1)
    c = plan.spacing(horizon + 1)
    xi = np.zeros(2 * horizon + 2)
    if noise is not None:
        xi = noise.draw(make_rng(seed), 2 * horizon + 2)
    x = float(x0)
    out = [x]
    diverged = False
    for n in range(1, horizon + 1):
        up = psi(x + c[n]) + xi[2 * n + 1]
        down = psi(x - c[n]) + xi[2 * n]
        y = x - mu[n] * (up - down) / (2 * c[n])
        if not math.isfinite(y) or abs(y) > DIVERGENCE_CUTOFF:
            diverged = True
            break
        x = y
        out.append(x)
    return Trace(np.arange(1, len(out) + 1), np.array(out), diverged=diverged)


def quantile_track(dist, alpha: float, steps: StepSequence, z0: float, horizon: int,
                   seed: int = 0) -> Trace:
    """z_i = z_{i-1} - mu_i (I(xi_i <= z_{i-1}) - alpha), i = 1..horizon."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0,1)")
    xi = SampleStream(dist, seed).sample(horizon).tolist()
    mu = steps.prefix(horizon + 1).tolist()
    z = float(z0)
    out = [z]
    for i in range(1, horizon + 1):
        z = z - mu[i] * ((1.0 if xi[i - 1] <= z else 0.0) - alpha)
        out.append(z)
    return Trace(np.arange(horizon + 1), np.array(out))


def check_step_plan(plan: StepPlan, horizon: int) -> ConditionReport:
    """Sums over n = 1..horizon of mu^2, (mu/c)^2, mu c and mu."""
    n = np.arange(1, horizon + 1)
    mu = plan.mu.prefix(horizon + 1)[1:]
    conds = {"sum_mu2": assess_terms(mu**2, n), "sum_mu": assess_terms(mu, n)}
    if plan.c is not None:
        c = plan.spacing(horizon + 1)[1:]
        conds["sum_mu_over_c_sq"] = assess_terms((mu / c) ** 2, n)
        conds["sum_mu_c"] = assess_terms(mu * c, n)
    return ConditionReport(horizon, conds)


@dataclass(frozen=True)
class VarianceCheck:
    empirical: float
    theoretical: float
    rel_error: float
    replicas: int
    horizon: int


def asymptotic_variance_check(B: float, a: float, sigma: float, replicas: int = 1000,
                              horizon: int = 10_000, seed: int = 0, theta: float = 0.0,
                              x0: float = 0.0) -> VarianceCheck:
    """Variance of sqrt(n)(X_n - theta) for f(x) = B(x - theta), mu_n = a/(n+1).

    Replica r draws its noise from seed mix(seed, r).
    """
    if a * B <= 0.5:
        raise ValueError("need aB > 1/2")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma > 0:
        dist = Normal(0.0, sigma)
        xi = np.stack([dist.draw(make_rng(mix_seed(seed, r)), horizon) for r in range(replicas)],
                      axis=1)
    else:
        xi = np.zeros((horizon, replicas))
    x = np.full(replicas, float(x0))
    for n in range(horizon):
        x = x - (a / (n + 1.0)) * (B * (x - theta) + xi[n])
    z = math.sqrt(horizon) * (x - theta)
    emp = float(np.var(z, ddof=1))
    th = a * a * sigma * sigma / (2 * a * B - 1)
    rel = abs(emp - th) / th if th > 0 else abs(emp)
    return VarianceCheck(emp, th, rel, replicas, horizon)


# registered drift library for configs -----------------------------------------

def _linear(theta=0.0, slope=1.0):
    return lambda x: slope * (x - theta)


def _exp_damped(theta=3.0, rate=0.1):
    return lambda x: (x - theta) * np.exp(-rate * (x - theta))


def _quadratic(theta=0.0):
    # monotone, grows quadratically away from the root
    return lambda x: (x - theta) * (1 + np.abs(x - theta))


def _piecewise(theta=0.0, inner=1.0, outer=0.2):
    return lambda x: np.where(np.abs(x - theta) <= 1, inner * (x - theta),
                              np.sign(x - theta) * (inner + outer * (np.abs(x - theta) - 1)))


DRIFTS = {"linear": _linear, "exp-damped": _exp_damped, "quadratic": _quadratic,
          "piecewise": _piecewise}


def drift_from_config(name: str, **params):
    if name not in DRIFTS:
        raise ValueError(f"unknown drift {name!r}; known: {sorted(DRIFTS)}")
    return stationary(DRIFTS[name](**params))
