"""Laws of large numbers, CLT, LIL and almost-sure global CLT simulations,
plus series-condition reports."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .processes import (Distribution, IID, Normal, SampleStream, make_rng, mix_seed)
from .series import ConditionReport, assess_terms
from .summability import StepSequence, WeightSequence, _riesz_recursion, conjugate_steps
from .trace import Trace, table_to_csv


@dataclass(frozen=True)
class LLNConfig:
    process: object  # ProcessSpec or Distribution
    weights: WeightSequence = field(default_factory=WeightSequence.const)
    center: float | None = None
    scaling: Callable[[np.ndarray], np.ndarray] | None = None
    horizon: int = 1000
    thin: int = 1

    def __post_init__(self):
        if self.horizon < 1 or self.thin < 1:
            raise ValueError("horizon and thin must be >= 1")


def lln_trace(cfg: LLNConfig, seed: int) -> Trace:
    """Weighted (Riesz) means Y_n of centered draws, every ``thin`` steps."""
    x = SampleStream(cfg.process, seed).sample(cfg.horizon)
    if cfg.center is not None:
        x = x - cfg.center
    mu = conjugate_steps(cfg.weights, cfg.horizon).prefix(cfg.horizon)
    y = _riesz_recursion(x, mu)
    n = np.arange(1, cfg.horizon + 1)
    if cfg.scaling is not None:
        y = y * np.asarray(cfg.scaling(n), dtype=float)
    keep = n % cfg.thin == 0
    if not keep[-1]:
        keep[-1] = True
    finite = np.isfinite(y)
    diverged = not finite.all()
    if diverged:
        stop = int(np.argmin(finite))
        keep[stop:] = False
    return Trace(n[keep], y[keep], diverged=diverged, meta={"weights": cfg.weights.name})


def jamison_ratios(weights: WeightSequence, horizon: int) -> np.ndarray:
    """r_n = sum_{i<n} alpha_i / alpha_{n-1} for n = 1..horizon."""
    la = weights.log_prefix(horizon)
    a = np.exp(la - la.max())
    with np.errstate(divide="ignore"):
        return np.cumsum(a) / a


def jamison_capacity(weights: WeightSequence, x_grid, horizon: int):
    """List of (x, N(x), N(x)/x), N(x) = #{n <= horizon : r_n <= x}."""
    x = np.asarray(x_grid, dtype=float)
    if np.any(x <= 0):
        raise ValueError("x_grid must be positive")
    r = np.sort(jamison_ratios(weights, horizon))
    counts = np.searchsorted(r, x, side="right")
    return [(float(a), int(c), float(c / a)) for a, c in zip(x, counts)]


def three_series_report(family: Callable[[int], Distribution], K: float, horizon: int,
                        start: int = 1) -> ConditionReport:
    """Kolmogorov's three series for X_n ~ family(n), n = start..horizon."""
    if not K > 0:
        raise ValueError("K must be positive")
    rows = np.array([family(n).truncated_moments(K) for n in range(start, horizon + 1)])
    p, m1, m2 = rows.T
    var = np.maximum(m2 - m1 * m1, 0.0)
    idx = np.arange(start, horizon + 1)
    return ConditionReport(horizon, {
        "tail_probability": assess_terms(p, idx),
        "truncated_mean": assess_terms(m1, idx),
        "truncated_variance": assess_terms(var, idx),
    })


def variance_condition_report(var_x: Callable[[np.ndarray], np.ndarray], steps: StepSequence,
                              horizon: int, var_mean: Callable | None = None,
                              sampler: Callable | None = None, replicas: int = 64,
                              seed: int = 0) -> ConditionReport:
    """Partial sums of sum mu_n^2 var(X_{n+1}) and sum mu_n sqrt(var(X_{n+1}) var(Xbar_n)).

    ``var_mean(n)`` gives var(Xbar_n) in closed form. Otherwise ``sampler(rng,
    horizon)`` must return one path X_1..X_horizon and var(Xbar_n) is estimated
    over ``replicas`` independent paths.
    """
    n = np.arange(1, horizon)
    mu = steps.prefix(horizon)[1:]
    vx = np.asarray(var_x(n + 1), dtype=float)
    stderr = None
    if var_mean is not None:
        vm = np.asarray(var_mean(n), dtype=float)
    elif sampler is not None:
        steps_all = steps.prefix(horizon)
        paths = []
        for r in range(replicas):
            xs = np.asarray(sampler(make_rng(mix_seed(seed, r)), horizon), dtype=float)
            paths.append(_riesz_recursion(xs, steps_all))
        P = np.array(paths)[:, : horizon - 1]  # Xbar_1..Xbar_{H-1}
        vm = P.var(axis=0, ddof=1)
        stderr = vm * math.sqrt(2.0 / (replicas - 1))
    else:
        raise ValueError("need var_mean or sampler")
    t1 = mu**2 * vx
    t2 = mu * np.sqrt(np.maximum(vx * vm, 0.0))
    extra = {} if stderr is None else {"var_mean": vm, "var_mean_stderr": stderr}
    return ConditionReport(horizon, {
        "sum_mu2_var": assess_terms(t1, n),
        "sum_mu_sqrt_var_var": assess_terms(t2, n),
    }, extra=extra)


def _log2p(x):
    """max(log2 x, 1), with 1 for x = inf or x <= 0 never used (guarded)."""
    with np.errstate(divide="ignore"):
        return np.maximum(np.log2(x), 1.0)


def orthogonal_coeff_conditions(c, horizon: int | None = None,
                                block_eps=(2.0, 1.0)) -> ConditionReport:
    """Coefficient conditions for a.e. convergence of orthogonal series.

    ``c`` holds c_1..c_H. Logs are base 2; log+ is max(log2, 1).
    """
    c = np.asarray(c, dtype=float)
    if horizon is not None:
        c = c[:horizon]
    H = c.size
    i = np.arange(1, H + 1, dtype=float)
    c2 = c * c
    lg = np.log2(i)
    rm = c2 * lg**2
    nz = c2 > 0
    tand = np.zeros(H)
    sel = nz & (i >= 3)
    tand[sel] = c2[sel] * lg[sel] * _log2p(1.0 / c2[sel])
    conds = {"rademacher_menchoff": assess_terms(rm, i),
             "tandori": assess_terms(tand[2:], i[2:])}
    nblocks = int(math.floor(math.log2(H))) if H >= 2 else 0
    for eps in block_eps:
        terms = []
        for b in range(nblocks):
            lo, hi = 2**b + 1, 2 ** (b + 1)  # indices k in Z(b)
            if hi > H:
                break
            ck = c2[lo - 1: hi]
            A = ck.sum()
            if A == 0:
                terms.append(0.0)
                continue
            m = ck > 0
            kk = np.arange(lo, hi + 1, dtype=float)[m]
            terms.append(float(np.sum(ck[m] * np.log2(kk) ** eps * _log2p(2 * A / ck[m]) ** (2 - eps))))
        conds[f"block_eps{eps:g}"] = assess_terms(np.array(terms), np.arange(1, len(terms) + 1))
    return ConditionReport(H, conds)


def _orthogonal_draws(system: str, rng, horizon: int) -> np.ndarray:
    u = rng.random((horizon, 3))
    sign = np.where(u[:, 0] < 0.5, -1.0, 1.0)
    if system == "iid":
        return special.ndtri(np.where(u[:, 1] == 0, 2.0**-54, u[:, 1]))
    if system == "martingale":
        # sign times a unit-second-moment magnitude whose law depends on the
        # sign of the previous term: |Z| after a positive term, sqrt(3)U after
        # a negative one. Conditional mean 0, variance 1, not independent.
        mag_a = np.abs(special.ndtri(np.where(u[:, 1] == 0, 2.0**-54, u[:, 1])))
        mag_b = math.sqrt(3.0) * u[:, 2]
        prev_pos = np.concatenate(([True], sign[:-1] > 0))
        return sign * np.where(prev_pos, mag_a, mag_b)
    raise ValueError(f"unknown system {system!r}")


def orthogonal_series_trace(c, system: str = "iid", seed: int = 0,
                            horizon: int | None = None) -> Trace:
    """S_n = sum_{i<=n} c_i X_i with running max |S_k| inside the current dyadic block."""
    c = np.asarray(c, dtype=float)
    H = horizon or c.size
    x = _orthogonal_draws(system, make_rng(seed), H)
    S = np.cumsum(c[:H] * x)
    n = np.arange(1, H + 1)
    block = np.floor(np.log2(n)).astype(int)
    bmax = np.empty(H)
    a = np.abs(S)
    for b in np.unique(block):
        sl = block == b
        bmax[sl] = np.maximum.accumulate(a[sl])
    return Trace(n, S, {"block_max": bmax})


def maximal_moment_scaling(c, ns=(2**8, 2**10, 2**12, 2**14), replicas: int = 200,
                           seed: int = 0, system: str = "iid") -> dict:
    """E max_{k<=n} S_k^2 / sum_{i<=n} c_i^2 and its fitted exponent on log n."""
    c = np.asarray(c, dtype=float)
    H = max(ns)
    m = np.zeros(len(ns))
    for r in range(replicas):
        S = np.cumsum(c[:H] * _orthogonal_draws(system, make_rng(mix_seed(seed, r)), H))
        run = np.maximum.accumulate(S * S)
        m += run[np.asarray(ns) - 1]
    m /= replicas
    c2 = np.cumsum(c[:H] ** 2)[np.asarray(ns) - 1]
    ratio = m / c2
    slope = float(np.polyfit(np.log(np.log2(ns)), np.log(ratio), 1)[0])
    return {"n": list(ns), "ratio": ratio.tolist(), "log_exponent": slope}


@dataclass(frozen=True)
class HistogramTable:
    edges: np.ndarray
    counts: np.ndarray
    masses: np.ndarray
    reference: np.ndarray  # N(0,1) masses of the same cells, end cells open
    tv: float

    def to_csv(self, path=None) -> str:
        rows = zip(self.edges[:-1], self.edges[1:], self.counts, self.masses, self.reference)
        return table_to_csv(["lo", "hi", "count", "mass", "normal_mass"], rows, path)


def clt_block_histogram(dist: Distribution, block: int, blocks: int, bins: int = 40,
                        seed: int = 0) -> HistogramTable:
    """Histogram of standardized block sums of centered draws.

    Bins are equal-width over [-4, 4] in standardized units; values beyond
    are counted in the end bins, whose reference mass includes the normal
    tails, so masses always sum to 1.
    """
    if block < 1 or blocks < 1:
        raise ValueError("block and blocks must be >= 1")
    x = SampleStream(dist, seed).sample(block * blocks) - dist.mean
    eta = x.reshape(blocks, block).sum(axis=1) / (dist.std * math.sqrt(block))
    edges = np.linspace(-4.0, 4.0, bins + 1)
    idx = np.clip(np.searchsorted(edges, eta, side="right") - 1, 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    masses = counts / blocks
    cdf = special.ndtr(edges)
    cdf[0], cdf[-1] = 0.0, 1.0
    ref = np.diff(cdf)
    tv = 0.5 * float(np.abs(masses - ref).sum())
    return HistogramTable(edges, counts, masses, ref, tv)


def lil_envelope(n, sigma: float = 1.0) -> np.ndarray:
    """sigma sqrt(2 n log log n) for n >= 3 and 1 for n < 3."""
    n = np.asarray(n, dtype=float)
    ll = np.log(np.log(np.maximum(n, math.e)))
    return np.where(n < 3, 1.0, sigma * np.sqrt(2 * n * ll))


@dataclass(frozen=True)
class LILReport:
    horizon: int
    epsilon: float
    sigma: float
    sigma_assumed: bool
    exceedances: int
    last_exceedance: int | None
    late_from: int
    late_exceedances: int
    inner_band_fraction: float


def lil_envelope_report(dist: Distribution | None, horizon: int, epsilon: float, seed: int = 0,
                        sigma: float | None = None, late_from: int = 10_000,
                        draws: np.ndarray | None = None) -> LILReport:
    """Exceedances of |S_n| over (1+eps) sigma sqrt(2n log log n), n in [3, horizon]."""
    if draws is None:
        x = SampleStream(dist, seed).sample(horizon)
        m = dist.mean
        if np.isfinite(m):
            x = x - m
    else:
        x = np.asarray(draws, dtype=float)[:horizon]
    assumed = False
    if sigma is None:
        sigma = dist.std if dist is not None else float("nan")
        if not np.isfinite(sigma):
            sigma, assumed = 1.0, True
    S = np.cumsum(x)
    n = np.arange(1, horizon + 1)
    env = lil_envelope(n, sigma)
    over = (np.abs(S) > (1 + epsilon) * env) & (n >= 3)
    inner = (np.abs(S) > (1 - epsilon) * env) & (n >= 3)
    hits = n[over]
    return LILReport(horizon, epsilon, float(sigma), assumed, int(over.sum()),
                     int(hits[-1]) if hits.size else None, late_from,
                     int((hits > late_from).sum()), float(inner[2:].mean()))


def gclt_as_trace(dist: Distribution, x: float | None = 1.0, horizon: int = 10_000,
                  seed: int = 0, windows: Callable | None = None, weight: str = "harmonic",
                  nu: float = 0.0, thin: int = 1, force_eta_one: bool = False) -> Trace:
    """Log-averaged normalized indicators of S_k in [alpha_k, beta_k).

    Half-line windows use beta_k = x sigma sqrt(k). p_k is exact for Normal
    increments and the CLT surrogate otherwise (meta['surrogate'] is set).
    ``weight='harmonic'`` gives (1/ln n) sum_{k<=n} eta_k / k for n >= 2;
    ``weight='log'`` gives (1/A_n) sum_{i<n} a_i eta_{i+1} with
    a_i = ln+(i+1)^nu / (i+1), ln+ = max(ln, 1).
    """
    sigma = dist.std
    k = np.arange(1, horizon + 1, dtype=float)
    if force_eta_one:
        eta = np.ones(horizon)
        surrogate = False
    else:
        X = SampleStream(dist, seed).sample(horizon)
        S = np.cumsum(X)
        sq = sigma * np.sqrt(k)
        if windows is None:
            lo = np.full(horizon, -np.inf)
            hi = np.full(horizon, x) * sq
        else:
            lo, hi = (np.asarray(v, dtype=float) for v in windows(k))
        surrogate = not isinstance(dist, Normal)
        mean_k = dist.mean * k if np.isfinite(dist.mean) else 0.0
        p = special.ndtr((hi - mean_k) / sq) - special.ndtr((lo - mean_k) / sq)
        ind = ((S >= lo) & (S < hi)).astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            eta = np.where(p > 0, ind / p, 1.0)
    if weight == "harmonic":
        val = np.cumsum(eta / k)[1:] / np.log(k[1:])
        steps = np.arange(2, horizon + 1)
    elif weight == "log":
        i = np.arange(horizon, dtype=float)
        a = np.maximum(np.log(i + 1), 1.0) ** nu / (i + 1)
        val = np.cumsum(a * eta) / np.cumsum(a)
        steps = np.arange(1, horizon + 1)
    else:
        raise ValueError(f"unknown weight {weight!r}")
    keep = (steps % thin == 0)
    keep[-1] = True
    return Trace(steps[keep], val[keep], meta={"surrogate": surrogate, "weight": weight})
