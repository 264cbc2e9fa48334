"""Kernels, batch and recursive density estimators, kernel cdf estimates,
histograms and bandwidth theory."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import special

from .trace import GridFunction, table_to_csv

SQRT5 = math.sqrt(5.0)
EPANECHNIKOV_C = 3.0 / (5.0 * SQRT5)  # kappa * roughness of the optimal kernel
CAUCHY_CUTOFF = math.sqrt(1e12 - 1.0)  # pdf below 1e-12 of its peak beyond this


@dataclass(frozen=True)
class Kernel:
    name: str
    pdf: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    kappa2: float  # int t^2 K(t) dt
    roughness: float  # int K(t)^2 dt

    def __call__(self, t):
        return self.pdf(t)


def _triangular_pdf(t):
    return np.maximum(1.0 - np.abs(t), 0.0)


def _triangular_cdf(t):
    t = np.clip(t, -1.0, 1.0)
    return np.where(t < 0, 0.5 * (1 + t) ** 2, 1 - 0.5 * (1 - t) ** 2)


def _epan_pdf(t):
    t = np.asarray(t, float)
    return np.where(np.abs(t) <= SQRT5, 3.0 / (4.0 * SQRT5) * (1.0 - t * t / 5.0), 0.0)


def _epan_cdf(t):
    t = np.clip(np.asarray(t, float), -SQRT5, SQRT5)
    return 3.0 * SQRT5 / 20.0 * (t - t**3 / 15.0 + 2.0 * SQRT5 / 3.0)


def _cauchy_pdf(t):
    t = np.asarray(t, float)
    return np.where(np.abs(t) <= CAUCHY_CUTOFF, 1.0 / (np.pi * (1.0 + t * t)), 0.0)


def _cauchy_cdf(t):
    return 0.5 + np.arctan(t) / np.pi


def _rect_pdf(t):
    return np.where(np.abs(np.asarray(t, float)) <= 1.0, 0.5, 0.0)


def _rect_cdf(t):
    return 0.5 * (np.clip(np.asarray(t, float), -1.0, 1.0) + 1.0)


def _gauss_pdf(t):
    t = np.asarray(t, float)
    return np.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)


_BUILTINS = {
    "triangular": lambda: Kernel("triangular", _triangular_pdf, _triangular_cdf, 1.0, 1 / 6, 2 / 3),
    "cauchy": lambda: Kernel("cauchy", _cauchy_pdf, _cauchy_cdf, math.inf, math.inf,
                             1 / (2 * math.pi)),
    "epanechnikov": lambda: Kernel("epanechnikov", _epan_pdf, _epan_cdf, SQRT5, 1.0,
                                   EPANECHNIKOV_C),
    "rectangular": lambda: Kernel("rectangular", _rect_pdf, _rect_cdf, 1.0, 1 / 3, 0.5),
    "gaussian": lambda: Kernel("gaussian", _gauss_pdf, special.ndtr, math.inf, 1.0,
                               1 / (2 * math.sqrt(math.pi))),
}

BUILTIN_NAMES = tuple(_BUILTINS)


def builtin_kernel(name: str) -> Kernel:
    try:
        return _BUILTINS[name]()
    except KeyError:
        raise ValueError(f"unknown kernel {name!r}; known: {list(_BUILTINS)}") from None


def power_bandwidth(beta: float, c: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """h(i) = c i^{-beta} for i >= 1."""
    return lambda i: c * np.asarray(i, dtype=float) ** (-beta)


def default_grid(samples, h: float, n: int = 512) -> np.ndarray:
    s = np.asarray(samples, float)
    return np.linspace(s.min() - 4 * h, s.max() + 4 * h, n)


def _kernel_sum(grid, samples, kernel, h, weights=None, chunk=2048):
    """sum_i w_i K((y - X_i)/h_i) / h_i for each grid point y."""
    grid = np.asarray(grid, float)
    x = np.asarray(samples, float)
    hv = np.broadcast_to(np.asarray(h, float), x.shape)
    w = np.ones_like(x) if weights is None else np.asarray(weights, float)
    out = np.zeros_like(grid)
    for s in range(0, x.size, chunk):
        sl = slice(s, s + chunk)
        t = (grid[:, None] - x[None, sl]) / hv[None, sl]
        out += (kernel.pdf(t) * (w[sl] / hv[sl])[None, :]).sum(axis=1)
    return out


def batch_density(samples, kernel: Kernel, h: float, grid) -> GridFunction:
    """f_n(y) = (1/n) sum (1/h) K((y - X_i)/h)."""
    x = np.asarray(samples, float)
    if x.size == 0:
        raise ValueError("no samples")
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    return GridFunction(grid, _kernel_sum(grid, x, kernel, h) / x.size,
                        meta={"kernel": kernel.name, "h": h, "n": int(x.size)})


def recursive_batch_formula(samples, kernel: Kernel, bandwidth, grid) -> np.ndarray:
    """Direct evaluation of (1/n) sum (1/h_i) K((y - X_i)/h_i), i = 1..n."""
    x = np.asarray(samples, float)
    h = bandwidth(np.arange(1, x.size + 1))
    return _kernel_sum(grid, x, kernel, h) / x.size


@dataclass(frozen=True)
class DensityState:
    grid: np.ndarray
    values: np.ndarray
    count: int
    bandwidth: Callable[[np.ndarray], np.ndarray]

    @staticmethod
    def empty(grid, bandwidth) -> "DensityState":
        g = np.asarray(grid, float)
        if g.ndim != 1 or np.any(np.diff(g) <= 0):
            raise ValueError("grid must be strictly increasing")
        return DensityState(g, np.zeros_like(g), 0, bandwidth)

    def as_grid_function(self) -> GridFunction:
        return GridFunction(self.grid, self.values, meta={"n": self.count})


def recursive_density_update(state: DensityState, x: float, kernel: Kernel) -> DensityState:
    """f_{n+1} = (1 - 1/(n+1)) f_n + K((y - x)/h_{n+1}) / ((n+1) h_{n+1})."""
    if not math.isfinite(x):
        raise ValueError("non-finite observation")
    n1 = state.count + 1
    h = float(state.bandwidth(n1))
    vals = (1.0 - 1.0 / n1) * state.values + kernel.pdf((state.grid - x) / h) / (n1 * h)
    return replace(state, values=vals, count=n1)


def recursive_density(samples, kernel: Kernel, bandwidth, grid) -> DensityState:
    state = DensityState.empty(grid, bandwidth)
    for x in np.asarray(samples, float):
        state = recursive_density_update(state, float(x), kernel)
    return state


def cdf_estimate(samples, kernel: Kernel, h, grid) -> GridFunction:
    """(1/n) sum F_K((x - X_i)/h_i). ``h`` is a constant or an index rule i -> h_i."""
    x = np.asarray(samples, float)
    hv = h(np.arange(1, x.size + 1)) if callable(h) else np.full(x.size, float(h))
    grid = np.asarray(grid, float)
    out = np.zeros_like(grid)
    for s in range(0, x.size, 2048):
        sl = slice(s, s + 2048)
        out += kernel.cdf((grid[:, None] - x[None, sl]) / hv[None, sl]).sum(axis=1)
    return GridFunction(grid, out / x.size, meta={"kernel": kernel.name})


@dataclass(frozen=True)
class HistogramCells:
    lo: np.ndarray  # -inf for the first cell
    hi: np.ndarray  # +inf for the last cell
    counts: np.ndarray
    masses: np.ndarray

    def to_csv(self, path=None) -> str:
        return table_to_csv(["lo", "hi", "count", "mass"],
                            zip(self.lo, self.hi, self.counts, self.masses), path)


def histogram(samples, edges) -> HistogramCells:
    """Cells (-inf, e_0), [e_0, e_1), ..., [e_last, inf) with n_j / N."""
    x = np.asarray(samples, float)
    e = np.asarray(edges, float)
    if np.any(np.diff(e) <= 0):
        raise ValueError("edges must be increasing")
    idx = np.searchsorted(e, x, side="right")
    counts = np.bincount(idx, minlength=e.size + 1)
    lo = np.concatenate(([-np.inf], e))
    hi = np.concatenate((e, [np.inf]))
    return HistogramCells(lo, hi, counts, counts / x.size)


def amise(h, n: int, kernel: Kernel, curvature: float):
    """roughness/(n h) + h^4 kappa^4 curvature / 4, with kappa^4 = (kappa2)^2."""
    h = np.asarray(h, float)
    return kernel.roughness / (n * h) + 0.25 * h**4 * kernel.kappa2**2 * curvature


def optimal_bandwidth(kernel: Kernel, n: int, curvature: float) -> float:
    if not curvature > 0:
        raise ValueError("bandwidth undefined for zero curvature")
    if n < 1:
        raise ValueError("n must be >= 1")
    return (kernel.roughness / (n * kernel.kappa2**2 * curvature)) ** 0.2


NORMAL_CURVATURE = 3.0 / (8.0 * math.sqrt(math.pi))  # int (phi'')^2 for N(0,1)


def kernel_efficiency(kernel: Kernel) -> float:
    """(3/(5 sqrt 5)) / (kappa * roughness); 0 when kappa is infinite."""
    if kernel.kappa2 == 0:
        raise ValueError("kernel has zero second moment")
    if not math.isfinite(kernel.kappa2):
        return 0.0
    return EPANECHNIKOV_C / (math.sqrt(kernel.kappa2) * kernel.roughness)


def density_error(estimate: GridFunction, truth: Callable) -> tuple[float, float]:
    """Trapezoid integrals of |f_hat - f| and (f_hat - f)^2 over the valid grid."""
    x = estimate.x
    ok = estimate.valid
    d = np.where(ok, estimate.values - truth(x), 0.0)
    return float(np.trapezoid(np.abs(d), x)), float(np.trapezoid(d * d, x))
